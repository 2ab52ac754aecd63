from tabnav.cli import main

raise SystemExit(main())
