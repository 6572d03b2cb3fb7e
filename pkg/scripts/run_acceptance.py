"""Run the acceptance suite and print one pass/fail line per criterion."""
import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", "-p", "no:cacheprovider",
                       str(root / "tests" / "test_acceptance.py")], capture_output=True, text=True, cwd=root)
seen = set()
for line in proc.stdout.splitlines():
    if line.startswith("ACCEPTANCE") and line not in seen:
        seen.add(line)
        print(line)
sys.exit(proc.returncode)
