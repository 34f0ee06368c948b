#!/usr/bin/env python3
"""Quick validation script to check pipeline setup."""

import sys
from pathlib import Path

def check_imports():
    """Check if all pipeline modules can be imported."""
    print("Checking imports...")
    try:
        from src import models, config, series, numeric, diagnostics, decomposition
        from src import sarima, model_selection, holt_winters, nnar, evaluation
        from src import arrivals, chart_renderer, asset_manager, main_pipeline
        print("✓ All modules imported successfully")
        return True
    except ImportError as e:
        print(f"✗ Import error: {e}")
        return False

def check_dependencies():
    """Check if required dependencies are installed."""
    print("\nChecking dependencies...")
    missing = []

    for module, package in (
        ("numpy", "numpy"),
        ("scipy", "scipy"),
        ("pandas", "pandas"),
        ("PIL", "Pillow"),
        ("dotenv", "python-dotenv"),
        ("pydantic", "pydantic"),
    ):
        try:
            __import__(module)
            print(f"✓ {package} installed")
        except ImportError:
            print(f"✗ {package} not installed")
            missing.append(package)

    if sys.version_info < (3, 11):
        print(f"✗ Python 3.11+ required for tomllib (found {sys.version.split()[0]})")
        missing.append("python>=3.11")

    if missing:
        print(f"\nMissing dependencies: {', '.join(missing)}")
        print("Install with: pip install -r requirements.txt")
        return False

    return True

def check_generator_config():
    """Check that the shipped generator configuration loads and validates."""
    print("\nChecking generator configuration...")
    try:
        from src import config
        from src.arrivals import load_arrival_config
        gen_config = load_arrival_config(config.DEFAULT_ARRIVALS_CONFIG)
        print(f"✓ {config.DEFAULT_ARRIVALS_CONFIG.name}: {gen_config.n_hours} hours, "
              f"base rate {gen_config.base_rate}/hour, peak hour {gen_config.peak_hour}")
        return True
    except (OSError, ValueError) as e:
        print(f"✗ Generator configuration invalid: {e}")
        return False

def check_env_file():
    """Check environment configuration (a .env file is optional)."""
    print("\nChecking environment configuration...")
    env_path = Path(".env")

    if not env_path.exists():
        print("✓ No .env file; using defaults (copy .env.example to customise)")
    else:
        print("✓ .env file exists")

    try:
        from src import config
        config.validate_config()
        for key, value in config.get_config_summary().items():
            print(f"  {key}: {value}")
        return True
    except ValueError as e:
        print(f"✗ Configuration error: {e}")
        return False

def main():
    """Run all checks."""
    print("=" * 60)
    print("Arrival Forecasting Pipeline - Setup Validation")
    print("=" * 60)

    results = []

    results.append(("Dependencies", check_dependencies()))
    results.append(("Imports", check_imports()))
    results.append(("Generator config", check_generator_config()))
    results.append(("Environment", check_env_file()))

    print("\n" + "=" * 60)
    print("Summary:")
    print("=" * 60)

    all_passed = True
    for name, passed in results:
        status = "✓ PASS" if passed else "✗ FAIL"
        print(f"{status}: {name}")
        if not passed:
            all_passed = False

    print("=" * 60)

    if all_passed:
        print("\n✓ All checks passed! You're ready to run the pipeline.")
        print("\nTry: python -m src.main_pipeline generate --out output/data/arrivals.csv")
        return 0
    else:
        print("\n✗ Some checks failed. Please fix the issues above.")
        return 1

if __name__ == "__main__":
    sys.exit(main())
