"""Generate one code reference page per diveq module, and its navigation."""

from pathlib import Path

import mkdocs_gen_files

PACKAGE = Path("diveq")
SKIPPED = {"__main__"}

nav = mkdocs_gen_files.Nav()

for source in sorted(PACKAGE.rglob("*.py")):
    parts = list(source.with_suffix("").parts)
    if parts[-1] in SKIPPED:
        continue

    page = source.relative_to(PACKAGE).with_suffix(".md")
    if parts[-1] == "__init__":
        parts = parts[:-1]
        page = page.with_name("index.md")

    module = ".".join(parts)
    nav[parts] = page.as_posix()
    with mkdocs_gen_files.open(Path("reference", page), "w") as fd:
        fd.write(f"# `{module}`\n\n::: {module}\n")
    mkdocs_gen_files.set_edit_path(Path("reference", page), source)

with mkdocs_gen_files.open("reference/SUMMARY.md", "w") as nav_file:
    nav_file.writelines(nav.build_literate_nav())
