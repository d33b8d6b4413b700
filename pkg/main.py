import sys

from ftcbf.cli import main

# --- Entry point ---
# `python main.py run scenarios/two_robot_patrol.json --out runtime/runs/patrol`
if __name__ == "__main__":
    sys.exit(main())
