"""This protocol specifies the interface that any consumer of simulated trials must
adhere to. ``simulate`` delivers blocks in increasing trial index order.
"""

from ..simulator.block import TrialBlock


class TrialSinkProto:
    """Protocol defining the interface for a trial consumer."""

    def consume(self, block: TrialBlock) -> None:
        """Receives the next block of trials.

        Args:
            block: The trials, in index order, following the previous block.

        Raises:
            Exception: Any failure; ``simulate`` aborts and reports the trials
                delivered so far.
        """
        ...
