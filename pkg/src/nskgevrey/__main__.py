from nskgevrey.cli import main

raise SystemExit(main())
