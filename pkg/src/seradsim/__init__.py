"""Discrete-event simulation and SET fault injection for asynchronous
bundled-data pipelines hardened with error-detecting latches (the SERAD
scheme), plus synchronous, TMR and glitch-filter comparison variants."""

__version__ = "0.1.0"
