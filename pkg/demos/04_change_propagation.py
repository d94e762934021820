"""Edit the net after the transformation and let the rules catch up."""

from pn2sc import generate_sp, open_session, parse_change_script, propagate, transform
from pn2sc.formats import format_statechart, statechart_document

result = transform(generate_sp(2))
session = open_session(result)


def show(title):
    print(f"-- {title}")
    print(format_statechart(statechart_document(session.store, session.root)))


show("after transformation")

script = parse_change_script("""
add-place p9 P9
add-transition t9 Extra
rename-place c0 Main
""")
log = propagate(session, script)
print("fired:", log.by_rule())
show("after edits")

# removals are picked up by the dangling-trace rule
log = propagate(session, parse_change_script("remove-place p9\nremove-transition t9\nrename-place c0 c0\n"))
print("fired:", log.by_rule())
show("back again")
session.close()
