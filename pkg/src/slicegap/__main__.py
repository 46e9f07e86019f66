import sys

from slicegap.cli import main

sys.exit(main())
