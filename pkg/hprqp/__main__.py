import sys

from hprqp.cli_ import main

sys.exit(main())
