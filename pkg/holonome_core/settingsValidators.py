# see settingsDefinition.py
import math
import re
from collections import OrderedDict

from . import expr
from .errors import ConfigError


class ValidationException(ConfigError):
    pass


class Setting(object):
    __slots__ = ['required', 'validator', 'default']

    def __init__(self, required, validator, default):
        self.required = required
        self.validator = validator
        self.default = default


_IDENTIFIER = re.compile(r'^[A-Za-z_][A-Za-z_0-9]*$')
_ROW_SEPARATOR = re.compile(r'[;\n]')

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


def validateBool(b):
    if isinstance(b, bool):
        return b
    s = str(b).strip().lower()
    if s in _TRUE:
        return True
    if s in _FALSE:
        return False
    raise ValidationException("%r is not a boolean. Use true or false." % (b,))


def validateFloat(f):
    try:
        value = float(f)
    except (TypeError, ValueError):
        raise ValidationException("%r is not a number." % (f,))
    if not math.isfinite(value):
        raise ValidationException("%r is not a finite number." % (f,))
    return value


def validateConstant(c):
    """A number, or a constant expression such as 2*pi or sqrt(2)"""
    try:
        return validateFloat(c)
    except ValidationException:
        pass
    try:
        return expr.parse(str(c), (), ()).eval((), {})
    except ConfigError as e:
        raise ValidationException("%r is not a number or constant expression (%s)." % (c, e))


def validateInt(i):
    try:
        return int(str(i).strip())
    except (TypeError, ValueError):
        raise ValidationException("%r is not an integer." % (i,))


def validatePositiveFloat(f):
    value = validateFloat(f)
    if value <= 0:
        raise ValidationException("%r must be positive." % (f,))
    return value


def validateNonNegativeInt(i):
    value = validateInt(i)
    if value < 0:
        raise ValidationException("%r must not be negative." % (i,))
    return value


def validatePositiveInt(i):
    value = validateInt(i)
    if value < 1:
        raise ValidationException("%r must be at least 1." % (i,))
    return value


def validateGrid(i):
    value = validateInt(i)
    if value < 2:
        raise ValidationException("The multistart grid needs at least 2 points per "
                                  "coordinate, got %r." % (i,))
    return value


def validateStr(s):
    return str(s)


def validateExpression(s):
    s = str(s).strip()
    if not s:
        raise ValidationException("Empty expression.")
    return s


def validateName(s):
    s = str(s).strip()
    if not _IDENTIFIER.match(s):
        raise ValidationException("%r is not a valid name. Names start with a letter or "
                                  "underscore and contain only letters, digits and "
                                  "underscores." % s)
    if s in expr.FUNCTION_NAMES or s in expr.CONSTANTS:
        raise ValidationException("%r is reserved (it names a built-in function or "
                                  "constant)." % s)
    return s


def _split_items(s):
    if isinstance(s, (list, tuple)):
        return list(s)
    return [item.strip() for item in _ROW_SEPARATOR.sub(',', str(s)).split(',')
            if item.strip()]


def validateNameList(s):
    names = [validateName(n) for n in _split_items(s)]
    if not names:
        raise ValidationException("At least one coordinate is required.")
    seen = set()
    for n in names:
        if n in seen:
            raise ValidationException("Coordinate %r is listed twice." % n)
        seen.add(n)
    return names


def validateBoolList(s):
    return [validateBool(b) for b in _split_items(s)]


def validateFloatList(s):
    return [validateConstant(f) for f in _split_items(s)]


def validateExprList(s):
    """A flat list of expressions. Rows may be separated by ';' or by new
    lines; the row structure is not kept.

    """
    items = [validateExpression(e) for e in _split_items(s)]
    if not items:
        raise ValidationException("Expected at least one expression.")
    return items


def validateExprRows(s):
    """A list of rows of expressions. Rows are separated by ';' or by new
    lines, items inside a row by commas.

    """
    if isinstance(s, (list, tuple)):
        return [validateExprList(row) for row in s]
    rows = []
    for row in _ROW_SEPARATOR.split(str(s)):
        if row.strip():
            rows.append([validateExpression(e) for e in row.split(',')])
    return rows


def validateBettiList(s):
    """Betti numbers b_0, b_1, ...: non-negative integers"""
    return [validateNonNegativeInt(b) for b in _split_items(s)]


def validateMethod(method):
    method = str(method).strip().lower()
    if method not in ('rk4', 'rk45'):
        raise ValidationException("%r is not an integrator. Use 'rk4' or 'rk45'." % method)
    return method


def make_dictValidator(keyvalidator, valuevalidator):
    """Compose and return a dict validator -- a validator that validates each
    key and value in a dictionary.

    """
    def v(d):
        newd = OrderedDict()
        for key, value in d.items():
            newd[keyvalidator(key)] = valuevalidator(value)
        return newd
    v.keyvalidator = keyvalidator
    v.valuevalidator = valuevalidator
    return v


def make_listValidator(itemvalidator):
    """Compose and return a list validator that validates every item"""
    def v(items):
        if not isinstance(items, (list, tuple)):
            raise ValidationException("%r is not a list." % (items,))
        return [itemvalidator(item) for item in items]
    v.itemvalidator = itemvalidator
    return v


def make_configDictValidator(config, ignore_undefined=False, where=None):
    """Returns a validator for a "configdict": a dict of setting names to
    values. config maps each valid name to its Setting. The validator runs
    every Setting's validator, fills in defaults, and complains about
    required settings that are missing.

    Unknown names are an error unless ignore_undefined is set; a close
    misspelling of a valid name is reported with a suggestion.

    """
    prefix = "[%s] " % where if where else ""

    def configDictValidator(d):
        newdict = OrderedDict()
        for key in d.keys():
            if key not in config:
                match = _get_closest_match(key, iter(config.keys()))
                if ignore_undefined:
                    newdict[key] = d[key]
                elif match:
                    raise ValidationException(
                        "%s'%s' is not a configuration item. Did you mean '%s'?"
                        % (prefix, key, match))
                else:
                    raise ValidationException("%s'%s' is not a configuration item."
                                              % (prefix, key))

        for configkey, configsetting in config.items():
            if configkey in d:
                try:
                    newdict[configkey] = configsetting.validator(d[configkey])
                except ValidationException as e:
                    raise ValidationException("%s%s: %s" % (prefix, configkey, e))
            elif configsetting.default is not None:
                newdict[configkey] = configsetting.validator(configsetting.default)
            elif configsetting.required:
                raise ValidationException("%sRequired key '%s' was not specified. You must give "
                                          "a value for this setting." % (prefix, configkey))
        return newdict
    configDictValidator.config = config
    configDictValidator.ignore_undefined = ignore_undefined
    return configDictValidator


def error(errstr):
    def validator(_):
        raise ValidationException(errstr)
    return validator


def _levenshtein(s1, s2):
    previous = list(range(len(s1) + 1))
    for j, c2 in enumerate(s2, 1):
        current = [j]
        for i, c1 in enumerate(s1, 1):
            current.append(min(previous[i] + 1, current[i - 1] + 1,
                               previous[i - 1] + (c1 != c2)))
        previous = current
    return previous[-1]


def _get_closest_match(s, keys):
    """Returns a probable match for the given key `s` out of the possible keys in
    `keys`. Returns None if no matches are very close.

    """
    # it's probably not a typo if the distance is >3
    threshold = 3

    minmatch = None
    mindist = threshold + 1
    for key in keys:
        d = _levenshtein(s, key)
        if d < mindist:
            minmatch = key
            mindist = d

    if mindist <= threshold:
        return minmatch
    return None
