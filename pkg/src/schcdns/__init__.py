"""SCHC header compression with DNS-published rule digests.

Subpackages and modules:

* :mod:`schcdns.schc` - rule model, rule-file format, compression engine
* :mod:`schcdns.registry` - rule store, canonical digest, HTTP download service
* :mod:`schcdns.dns` - TXT record grammar, wire-format resolver, authoritative responder
* :mod:`schcdns.resolver` - application-server pipeline with digest-keyed rule cache
* :mod:`schcdns.sim` - Class-A LoRaWAN timing model on a virtual clock
* :mod:`schcdns.stats` / :mod:`schcdns.cli` - statistics and the ``schcdns`` command
"""

__version__ = "0.1.0"
