import sys

from birotation.main import main

sys.exit(main())
