# -*- coding: utf-8 -*-

################################################################################
#
# spikeclr: contrastive self-supervised pretraining of spiking networks
#
# Copyright (C) 2026 The spikeclr developers
#
# spikeclr is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# spikeclr is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
# FOR A PARTICULAR PURPOSE. See the GNU General Public License for more
# details.
#
# You should have received a copy of the GNU General Public License along with
# spikeclr. If not, see <http://www.gnu.org/licenses/>.
#
################################################################################

""" Exception hierarchy shared by all spikeclr modules.

The command line maps the classes to exit codes, see ``exit_code``.
"""

# ----------------------------------------------------------------------
class SpikeclrError(Exception):
    """ Base class of all errors raised by spikeclr. """

    exit_code = 2


class ConfigurationError(SpikeclrError, ValueError):
    exit_code = 1


class ParameterError(SpikeclrError, ValueError):
    exit_code = 1


class ParseError(SpikeclrError, ValueError):

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ''
        if path is not None:
            where += f'{path}'
        if line is not None:
            where += f':{line}'
        super().__init__(f'{where}: {message}' if where else message)


class BoundsError(SpikeclrError, ValueError):
    pass


class TruncationError(SpikeclrError, ValueError):
    pass


class ShapeError(SpikeclrError, ValueError):
    pass


class DataError(SpikeclrError, ValueError):
    pass


class ContractError(SpikeclrError, RuntimeError):
    pass


class CheckpointError(SpikeclrError, RuntimeError):
    pass


class GradcheckError(SpikeclrError, RuntimeError):
    exit_code = 3


# ----------------------------------------------------------------------
def exit_code(error):
    """ Process exit code for an exception raised by a command. """
    if isinstance(error, SpikeclrError):
        return error.exit_code
    return 2
