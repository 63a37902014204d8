"""Run the property checks and print the report table."""

from dgrl.theory import format_reports, run_all

print(format_reports(run_all(seed=0)))
