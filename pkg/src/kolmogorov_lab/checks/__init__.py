from kolmogorov_lab.checks.registry import CHECKS, CheckResult, CheckSpec, get_check, list_checks

__all__ = ["CHECKS", "CheckResult", "CheckSpec", "get_check", "list_checks"]
