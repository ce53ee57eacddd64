#!/usr/bin/env python3
"""
Campaign Validation Script
Checks a campaign file, the output directory and the numerical dependencies before a run.
"""

from __future__ import annotations

import argparse
import importlib
import sys
from pathlib import Path
from typing import Any

from src.config_loader import load_config
from src.config_validation import validate_config
from src.error_handler import ConfigurationError

REQUIRED_PACKAGES = ("numpy", "scipy", "mpmath", "jsonschema")


class CampaignValidator:
    """Validates one campaign configuration."""

    def __init__(self, config_path: str | None = None):
        self.config_path = config_path
        self.errors: list[str] = []
        self.warnings: list[str] = []
        self.config: dict[str, Any] | None = None

    def add_error(self, message: str) -> None:
        self.errors.append(f"ERROR: {message}")

    def add_warning(self, message: str) -> None:
        self.warnings.append(f"WARNING: {message}")

    def add_success(self, message: str) -> None:
        print(f"OK  {message}")

    def validate_campaign(self) -> bool:
        """Load the campaign over the defaults and run schema plus cross-field checks."""
        source = self.config_path or "built-in defaults"
        print(f"\nChecking campaign ({source})...")
        if self.config_path and not Path(self.config_path).exists():
            self.add_error(f"campaign file not found: {self.config_path}")
            return False
        try:
            self.config = load_config(self.config_path)
        except ConfigurationError as e:
            self.add_error(e.message)
            return False
        problems = validate_config(self.config)
        for problem in problems:
            self.add_error(problem)
        if not problems:
            self.add_success("campaign passes schema and cross-field checks")
        return not problems

    def validate_output_dir(self) -> bool:
        if self.config is None:
            return False
        print("\nChecking output directory...")
        out = Path(self.config["output"]["dir"])
        if out.exists() and not out.is_dir():
            self.add_error(f"output path exists and is not a directory: {out}")
            return False
        if not out.exists():
            self.add_warning(f"output directory {out} will be created")
        else:
            self.add_success(f"output directory {out} exists")
        cache_dir = self.config["general"].get("cache_dir")
        if cache_dir and Path(cache_dir).exists() and not Path(cache_dir).is_dir():
            self.add_error(f"cache_dir exists and is not a directory: {cache_dir}")
            return False
        baseline_dir = self.config["output"].get("baseline_dir")
        if baseline_dir and Path(baseline_dir).exists() and not Path(baseline_dir).is_dir():
            self.add_error(f"baseline_dir exists and is not a directory: {baseline_dir}")
            return False
        return True

    def validate_dependencies(self) -> bool:
        print("\nChecking Python dependencies...")
        ok = True
        for package in REQUIRED_PACKAGES:
            try:
                importlib.import_module(package)
                self.add_success(f"{package} is installed")
            except ImportError:
                self.add_error(f"required package {package} is not installed")
                ok = False
        return ok

    def run(self) -> int:
        """Run all validations and return the exit code."""
        print("Dirac-Coulomb campaign validator")
        print("=" * 60)
        self.validate_dependencies()
        if self.validate_campaign():
            self.validate_output_dir()

        print("\n" + "=" * 60)
        if self.warnings:
            print(f"\n{len(self.warnings)} warning(s):")
            for warning in self.warnings:
                print(f"   {warning}")
        if self.errors:
            print(f"\n{len(self.errors)} error(s):")
            for error in self.errors:
                print(f"   {error}")
            return 1
        print("\nAll validations passed.")
        return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Validate a dirac-lab campaign file")
    parser.add_argument("config", nargs="?", help="Campaign file; defaults are checked when omitted")
    args = parser.parse_args(argv)
    return CampaignValidator(args.config).run()


if __name__ == "__main__":
    sys.exit(main())
