#    This file is part of holonome.
#
#    holonome is free software: you can redistribute it and/or modify it
#    under the terms of the GNU General Public License as published by the
#    Free Software Foundation, either version 3 of the License, or (at your
#    option) any later version.
#
#    holonome is distributed in the hope that it will be useful, but WITHOUT
#    ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or
#    FITNESS FOR A PARTICULAR PURPOSE.  See the GNU General Public License for
#    more details.
#
#    You should have received a copy of the GNU General Public License along
#    with holonome.  If not, see <http://www.gnu.org/licenses/>.

"""Base classes for everything holonome raises on purpose.

Concrete exceptions live next to the code that raises them (the expression
parser, the integrators, the solvers ...). They all derive from one of the two
families below, and the command line maps the family to an exit code:
ConfigError to 2, NumericError to 3.

"""


class HolonomeError(Exception):
    """Root of the holonome exception tree"""


class ConfigError(HolonomeError):
    """The user gave us something we cannot work with: a malformed model
    file, an unknown name, a state of the wrong length.

    """


class NumericError(HolonomeError):
    """A computation failed: a metric that is not positive definite, a
    solver that did not converge, an integrator that blew up.

    """


class DimensionMismatch(ConfigError):
    pass


class OffManifoldError(ConfigError):
    """Raised when a point is required to lie on the critical set and does
    not. Carries the offending residual norm.

    """
    def __init__(self, message, residual):
        super(OffManifoldError, self).__init__(message)
        self.residual = residual
