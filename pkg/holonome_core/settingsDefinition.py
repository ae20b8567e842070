# This file describes the format of the model files and the numerical
# tolerances. Each item defined in this module is expected to appear in the
# described format. Instead of actual values, the values here are Setting
# objects which define how to validate a value as correct, and whether the
# value is required or not.

# Settings objects have this signature:
# Setting(required, validator, default)

# required
#   a boolean indicating that this value is required. A required setting will
#   always exist in a validated config. This option only has effect in the
#   event that a user doesn't provide a value and the default is None. In this
#   case, a required setting will raise an error. Otherwise, the setting is
#   omitted from the validated config.

# validator
#   a callable that takes the provided value and returns a cleaned/normalized
#   value to replace it with. It should raise a ValidationException if there is
#   a problem parsing or validating the value given. Model files are text, so
#   validators receive strings and coerce them.

# default
#   This is used in the event that the user does not provide a value. The
#   default is passed through the validator just the same.

# A model file is INI-like. Its sections map onto get_model_definition():
#
#   [model]        name, coordinates, periodic, unconstrained, lower, upper
#   [metric]       g: the n*n metric entries in row-major order
#   [potential]    U: the potential energy
#   [constraints]  zeta: one row of n coefficients per constraint 1-form
#   [params]       free-form name = number pairs
#
# Whether the parts fit together (the metric has n*n entries, constraint rows
# have n entries, 'unconstrained' excludes [constraints] ...) is checked when
# the system is built, see mechsys.build_system().

from collections import OrderedDict

from .settingsValidators import (Setting, make_configDictValidator, make_dictValidator,
                                 make_listValidator, validateBettiList, validateBool,
                                 validateBoolList, validateConstant, validateExpression,
                                 validateExprList, validateExprRows, validateFloatList,
                                 validateGrid, validateMethod, validateName, validateNameList,
                                 validateNonNegativeInt, validatePositiveFloat,
                                 validatePositiveInt, validateStr)


def get_model_definition():
    conf = OrderedDict()
    conf['model'] = Setting(required=True, default=None, validator=make_configDictValidator(
        OrderedDict([
            ("name", Setting(required=True, validator=validateStr, default="unnamed")),
            ("coordinates", Setting(required=True, validator=validateNameList, default=None)),
            ("periodic", Setting(required=False, validator=validateBoolList, default=None)),
            ("unconstrained", Setting(required=True, validator=validateBool, default=False)),
            ("lower", Setting(required=False, validator=validateFloatList, default=None)),
            ("upper", Setting(required=False, validator=validateFloatList, default=None)),
        ]), where="model"))

    conf['metric'] = Setting(required=True, default=None, validator=make_configDictValidator(
        {"g": Setting(required=True, validator=validateExprList, default=None)},
        where="metric"))

    conf['potential'] = Setting(required=True, default=None, validator=make_configDictValidator(
        {"U": Setting(required=True, validator=validateExpression, default=None)},
        where="potential"))

    conf['constraints'] = Setting(required=False, default=None,
                                  validator=make_configDictValidator(
        {"zeta": Setting(required=False, validator=validateExprRows, default=None)},
        where="constraints"))

    conf['params'] = Setting(required=True, default=OrderedDict(),
                             validator=make_dictValidator(validateName, validateConstant))
    return conf


# Every numerical default used by the library, under the name the command
# line and --set use for it.
def get_default_tolerances():
    conf = OrderedDict()
    # critical
    conf['newton_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-12)
    conf['max_iter'] = Setting(required=True, validator=validatePositiveInt, default=50)
    conf['rank_threshold'] = Setting(required=True, validator=validatePositiveFloat, default=1e-9)
    conf['step'] = Setting(required=True, validator=validatePositiveFloat, default=1e-2)
    conf['max_points'] = Setting(required=True, validator=validatePositiveInt, default=100000)
    conf['grid'] = Setting(required=True, validator=validateGrid, default=6)
    conf['dedup_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-6)
    conf['membership_tol'] = Setting(required=True, validator=validatePositiveFloat,
                                     default=1e-8)

    # flow
    conf['method'] = Setting(required=True, validator=validateMethod, default='rk45')
    conf['rel_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-9)
    conf['abs_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-12)
    conf['dt'] = Setting(required=True, validator=validatePositiveFloat, default=1e-3)
    conf['max_steps'] = Setting(required=True, validator=validatePositiveInt, default=1000000)
    conf['descent_threshold'] = Setting(required=True, validator=validatePositiveFloat,
                                        default=1e-10)

    # stability
    conf['classify_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-8)
    conf['zero_tol'] = Setting(required=True, validator=validatePositiveFloat, default=1e-6)
    conf['resonance_tol'] = Setting(required=True, validator=validatePositiveFloat,
                                    default=1e-6)
    conf['linearization_tol'] = Setting(required=True, validator=validatePositiveFloat,
                                        default=1e-5)
    conf['r_max'] = Setting(required=True, validator=validatePositiveInt, default=3)

    # geometry
    conf['max_depth'] = Setting(required=True, validator=validatePositiveInt, default=8)
    return conf


def get_default_tolerance_values():
    """The defaults of get_default_tolerances() as a plain dict"""
    return OrderedDict((k, s.validator(s.default))
                       for k, s in get_default_tolerances().items())


# A topology report is JSON:
#
#   {"ambient_betti": [1, 3, 3, 1],
#    "components": [{"label": "C_0_0", "betti": [1, 1], "index": 0}, ...]}
def get_topology_definition():
    component = make_configDictValidator(OrderedDict([
        ("label", Setting(required=True, validator=validateStr, default=None)),
        ("betti", Setting(required=True, validator=validateBettiList, default=None)),
        ("index", Setting(required=True, validator=validateNonNegativeInt, default=None)),
    ]), where="components")

    conf = OrderedDict()
    conf['ambient_betti'] = Setting(required=True, validator=validateBettiList, default=None)
    conf['components'] = Setting(required=True, validator=make_listValidator(component),
                                 default=None)
    return conf
