"""Multi-perspective agent memory resolved by argumentation."""
