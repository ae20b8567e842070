import configparser
import logging
import os.path

from . import settingsDefinition
from . import settingsValidators
from .errors import ConfigError


class MissingConfigException(ConfigError):
    """"To be thrown when the model file can't be found"""


class ModelParser(object):
    """A class that is used to parse a model file.

    This class's job is to read and validate the description of a mechanical
    system. It can read a model from a file with the parse() method or from
    text with parse_string(), and individual values can be set (or overridden)
    with set_config_item().

    get_validated_config() validates and returns the validated config

    """

    def __init__(self):
        # section name -> {key: raw value}
        self._config_state = {}
        self._settings = settingsDefinition.get_model_definition()
        self.source = None

        for sectionname, setting in self._settings.items():
            if setting.required and setting.default is not None:
                self._config_state[sectionname] = type(setting.default)(setting.default)

    def set_config_item(self, section, itemname, itemvalue):
        self._config_state.setdefault(section, {})[itemname] = itemvalue

    def parse(self, model_file):
        """Reads in the named file and parses it, storing the results in an
        internal state awaiting validation by get_validated_config()

        """
        if not os.path.isfile(model_file):
            raise MissingConfigException(
                "The model file you specified (%r) does not exist, or is not a file."
                % model_file)
        with open(model_file, encoding="utf-8") as f:
            text = f.read()
        self.parse_string(text, source=model_file)

    def parse_string(self, text, source="<string>"):
        reader = configparser.ConfigParser(interpolation=None, delimiters=('=',),
                                           comment_prefixes=('#',),
                                           inline_comment_prefixes=('#',),
                                           empty_lines_in_values=False)
        # keys are case sensitive: U is not u
        reader.optionxform = str
        try:
            reader.read_string(text, source=source)
        except configparser.Error as ex:
            logging.error("Error parsing '%s'.", source)
            raise settingsValidators.ValidationException(
                "Malformed model file %s: %s" % (source, ex))

        self.source = source
        for section in reader.sections():
            for key, value in reader.items(section):
                self.set_config_item(section, key, value)

    def get_validated_config(self):
        """Validate and return the configuration. Raises a ValidationException
        if there was a problem validating the config.

        """
        validator = settingsValidators.make_configDictValidator(self._settings)
        return validator(self._config_state)


def get_tolerances(overrides=None):
    """Validated tolerance settings: the defaults of
    settingsDefinition.get_default_tolerances() with overrides (name ->
    value, strings allowed) applied.

    """
    validator = settingsValidators.make_configDictValidator(
        settingsDefinition.get_default_tolerances(), where="tolerances")
    return validator(overrides or {})


def parse_assignments(assignments):
    """Turn ["key=value", ...] as given to --set into a dict"""
    result = {}
    for a in assignments or ():
        key, sep, value = a.partition('=')
        if not sep or not key.strip():
            raise settingsValidators.ValidationException(
                "Expected key=value, got %r." % a)
        result[key.strip()] = value.strip()
    return result
