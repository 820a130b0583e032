#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Error codes and exceptions shared by the sieve, the CLI and the HTTP service
"""

from typing import TYPE_CHECKING, Any, Optional, Sequence

if TYPE_CHECKING:
    from modules.factor import Factorization

EXIT_OK                                      = 0   # success
EXIT_CONFIG                                  = 2   # bad flags, bad config, malformed input
EXIT_IO                                      = 3   # checkpoint/report read or write failed
EXIT_NOT_PRIME                               = 4   # 2n(n-1)+1 is composite
EXIT_NOT_CANDIDATE                           = 5   # p is not a prime of the form 2n(n-1)+1
EXIT_INTERRUPTED                             = 6   # run stopped at a requested interrupt point


class QrSieveError(Exception):
    """Base class; `code` is the machine-parsable tag printed as error[CODE]"""

    code = 'ERROR'
    exit_code = EXIT_CONFIG


class ConfigError(QrSieveError):
    code = 'CONFIG'


class RangeError(QrSieveError):
    code = 'RANGE'


class BoundExceededError(QrSieveError):
    code = 'BOUND_EXCEEDED'


class OrderUndefinedError(QrSieveError):
    code = 'ORDER_UNDEFINED'


class NotInvertibleError(QrSieveError):
    code = 'NOT_INVERTIBLE'


class CyclotomicPreconditionError(QrSieveError):
    code = 'CYCLOTOMIC_PRECONDITION'


class NotPrimeError(QrSieveError):
    """2n(n-1)+1 failed the primality test; carries its factorization"""

    code = 'NOT_PRIME'
    exit_code = EXIT_NOT_PRIME

    def __init__(self, n: int, p: int, factorization: Optional['Factorization'] = None):
        self.n = n
        self.p = p
        self.factorization = factorization
        detail = f" = {factorization}" if factorization is not None else ''
        super().__init__(f"n={n}: p={p} is not prime{detail}")


class NotCandidatePrimeError(QrSieveError):
    code = 'NOT_CANDIDATE'
    exit_code = EXIT_NOT_CANDIDATE


class CollisionError(QrSieveError):
    """Two pairs (a', a'') produced the same sum a' + nu*a''"""

    code = 'COLLISION'

    def __init__(self, message: str, pairs: Sequence[Any]):
        self.pairs = pairs
        super().__init__(message)


class CheckpointMismatchError(QrSieveError):
    code = 'REJECTED'
    exit_code = EXIT_IO


class CheckpointIOError(QrSieveError):
    code = 'IO'
    exit_code = EXIT_IO


class SieveInterrupted(QrSieveError):
    """Raised after the checkpoint for the requested interrupt chunk is on disk"""

    code = 'INTERRUPTED'
    exit_code = EXIT_INTERRUPTED

    def __init__(self, chunk_index: int):
        self.chunk_index = chunk_index
        super().__init__(f"interrupted after chunk {chunk_index}")


class ReportIOError(QrSieveError):
    code = 'IO'
    exit_code = EXIT_IO
