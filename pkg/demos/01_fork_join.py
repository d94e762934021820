"""Transform the smallest series-parallel net and look at the result."""

import io

from pn2sc import generate_sp, transform
from pn2sc.formats import format_net, format_statechart, format_trace, statechart_document

# %% the input: c0 forks into a1/b1 which join into c1
net = generate_sp(1)
print(format_net(net))

# %% run the transformation, tracing each rule firing
log = io.StringIO()
result = transform(net, trace=log)
print(log.getvalue())

# %% one place left, and the statechart has a single root
print("places left:", result.place_count, "transitions left:", result.transition_count)
print(format_statechart(statechart_document(result.store, result.root)))

# the trace still ties the surviving place to its states
print(format_trace(result.store))
