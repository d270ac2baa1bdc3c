import sys

from cyclone_risk.main import main

if __name__ == "__main__":
    sys.exit(main())
