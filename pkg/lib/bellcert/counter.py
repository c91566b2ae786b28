"""This module provides the Counter class used to tally logged errors during a
run of the toolkit.
"""


class Counter:
    """
    In-process counter.

    Attributes:
        _name (str): Name reported by get_name.
        _value (int): The current count.
    """

    def __init__(self, name: str = "error_count") -> None:
        """
        Initializes a Counter instance at zero.

        Args:
            name (str): The name of the counter.
        """
        self._name = name
        self._value = 0

    def get(self) -> int:
        """
        Returns the value of the counter.

        Returns:
            int: The current value of the counter.
        """
        return self._value

    def increment(self) -> None:
        """
        Increases the counter by one.
        """
        self._value += 1

    def get_name(self) -> str:
        """
        get_name returns the name of the counter
        """
        return f"{self.__class__.__name__}_{self._name}"
