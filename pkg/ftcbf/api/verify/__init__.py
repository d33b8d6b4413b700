from ftcbf.api.verify.router import SuiteRouter, default_suites
from ftcbf.api.verify.suites import VerificationSuite, VerifyContext

__all__ = ["SuiteRouter", "VerificationSuite", "VerifyContext", "default_suites"]
