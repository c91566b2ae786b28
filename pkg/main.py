import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "lib"))

from bellcert.cli import main  # noqa: E402

# Usage: python main.py simulate --config config.json --out trials.csv
#        python main.py certify trials.csv
if __name__ == "__main__":
    sys.exit(main())
