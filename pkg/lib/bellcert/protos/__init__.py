"""
This module defines protocols for the consumers the simulator delivers trials to. The
simulator only relies on the methods declared here, so a trial log writer, an in-memory
collector or a test double can be passed interchangeably.

https://docs.python.org/3/library/typing.html#typing.Protocol
"""
