from awkward_agents.cli import main

raise SystemExit(main())
