"""Copy the top-level changelog and contributing guide into the docs."""

from pathlib import Path

import mkdocs_gen_files

for page in ("changelog.md", "contributing.md"):
    with mkdocs_gen_files.open(page, "w") as fd:
        fd.write(Path(page).read_text())
