"""Access auditing for pipeline-purity checks.

Fitting stages report the provenance ids they consume; tests and the
experiment runner open an audit to prove that held-out rows never reach
normalizer fitting, oversampling, hyperparameter search or training.
"""

from collections import Counter
from contextlib import contextmanager

_active = []


class AccessAudit:
    def __init__(self):
        self.events = []
        self.counts = Counter()

    def record(self, stage, ids):
        self.events.append((stage, frozenset(ids)))
        self.counts[stage] += 1

    def ids_for(self, *stages):
        seen = set()
        for stage, ids in self.events:
            if not stages or stage in stages:
                seen |= ids
        return seen


def record_access(stage, ids):
    for audit in _active:
        audit.record(stage, ids)


@contextmanager
def audit_access():
    audit = AccessAudit()
    _active.append(audit)
    try:
        yield audit
    finally:
        _active.remove(audit)
