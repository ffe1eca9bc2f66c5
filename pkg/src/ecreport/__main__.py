import sys

from ecreport.cli import main

sys.exit(main())
