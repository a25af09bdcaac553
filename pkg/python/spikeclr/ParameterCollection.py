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

import ast
import itertools
import numpy as np

from .exceptions import ConfigurationError

# ----------------------------------------------------------------------
class ParameterCollection(object):

    """ Helper class for handing collections of parameters.

    Parameters
    ----------

    kwargs : dict
        Key-word argument list of parameters.

    Examples
    --------

    A ``ParameterCollection`` has any number of attributes, accessible with the
    dot operator.

    >>> p = ParameterCollection(epochs=40, lr=0.05)
    >>> print(p)
    epochs = 40
    lr = 0.05
    >>> p.tau = 0.5
    >>> print(p.tau)
    0.5

    Collections nest one level deep and round trip through the line
    oriented document format used for config files.

    >>> p = ParameterCollection(pretrain=ParameterCollection(epochs=40))
    >>> print(p.to_document())
    pretrain.epochs = 40
    >>> ParameterCollection.from_document('pretrain.epochs = 40').pretrain.epochs
    40

    """

    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)

    def items(self):
        return list(self.__dict__.items())

    def keys(self):
        return list(self.__dict__.keys())

    def dict(self):
        return self.__dict__

    def alter(self, **kwargs):
        """Change or add attributes

        Returns
        -------
        p : ``ParameterCollection``
        """
        p = self.copy()
        p.__dict__.update(kwargs)
        return p

    def copy(self):
        """Shallow copy, nested collections are copied as well.
        """
        d = {}
        for key, value in self.items():
            if isinstance(value, ParameterCollection):
                value = value.copy()
            d[key] = value
        return ParameterCollection(**d)

    def __getitem__(self, key):
        return self.__dict__[key]

    def __eq__(self, other):
        if not isinstance(other, ParameterCollection):
            return NotImplemented
        return self.to_document() == other.to_document()

    # ------------------------------------------------------------------
    def flatten(self, prefix=''):
        """ Return a dict of dotted key paths to leaf values. """
        out = {}
        for key in sorted(self.keys()):
            value = self.__dict__[key]
            if isinstance(value, ParameterCollection):
                out.update(value.flatten(prefix + key + '.'))
            else:
                out[prefix + key] = value
        return out

    def get_dotted(self, path):
        obj = self
        for key in path.split('.'):
            if not isinstance(obj, ParameterCollection) or key not in obj.keys():
                raise ConfigurationError(f'unknown key {path!r}')
            obj = obj[key]
        return obj

    def set_dotted(self, path, value, strict=True):
        """ Set the leaf at a dotted key path.

        With ``strict`` the path has to exist already, which is how unknown
        config keys are rejected.
        """
        keys = path.split('.')
        obj = self
        for key in keys[:-1]:
            if key not in obj.keys():
                if strict:
                    raise ConfigurationError(f'unknown key {path!r}')
                obj.__dict__[key] = ParameterCollection()
            obj = obj[key]
            if not isinstance(obj, ParameterCollection):
                raise ConfigurationError(f'{path!r}: {key!r} is not a section')
        if strict and keys[-1] not in obj.keys():
            raise ConfigurationError(f'unknown key {path!r}')
        if strict and isinstance(obj[keys[-1]], ParameterCollection):
            raise ConfigurationError(f'{path!r} is a section, not a value')
        obj.__dict__[keys[-1]] = value

    # ------------------------------------------------------------------
    def to_document(self):
        """ Render as sorted ``dotted.key = literal`` lines. """
        lines = []
        for key, value in self.flatten().items():
            if isinstance(value, np.generic):
                value = value.item()
            lines.append(f'{key} = {value!r}')
        return '\n'.join(lines) + '\n' if lines else ''

    @classmethod
    def from_document(cls, text, source='<document>'):
        """ Parse the line format written by ``to_document``. """
        p = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ConfigurationError(
                    f'{source}:{lineno}: expected "key = value", got {raw!r}')
            key, value = [s.strip() for s in line.split('=', 1)]
            p.set_dotted(key, parse_value(value), strict=False)
        return p

    def __str__(self):
        out = ''
        keys = np.sort(list(self.__dict__.keys())) # sort keys
        for key in keys:
            value = self.__dict__[key]
            if type(value) is ParameterCollection:
                pc_list = str(value).splitlines()
                pc_txt = ''.join([ key + '.' + row + '\n' for row in pc_list ])
                out += pc_txt
            else:
                str_value = str(value)

                # Cut things that take more than ten rows
                str_value_lines = str_value.splitlines()
                max_lines = 10
                if len(str_value_lines) > max_lines:
                    str_value = '\n'.join(str_value_lines[:max_lines] + ['...'])

                out += ''.join([key, ' = ', str_value]) + '\n'
        return out

    __repr__ = __str__


# ----------------------------------------------------------------------
def parse_value(text):
    """ Interpret a config value: Python literal if possible, else string. """
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


# ----------------------------------------------------------------------
class ParameterCollections(object):

    r""" Helper class for handing a series of collections of parameters.

    Parameters
    ----------

    objects : list
        List of ``ParameterCollection`` instances.

    Examples
    --------

    >>> p1 = ParameterCollection(k=1, mean_acc=0.4)
    >>> p2 = ParameterCollection(k=5, mean_acc=0.7)
    >>> ps = ParameterCollections(objects=[p1, p2])
    >>> print(ps.k)
    [1 5]

    """

    def __init__(self, objects=None):
        self.objects = list(objects) if objects is not None else []

    def append(self, obj):
        self.objects.append(obj)

    def sort_on(self, attr):
        val = self.getattr_from_objects(attr)
        sidx = np.argsort(val, kind='stable')
        self.set_sorted_order(sidx)

    def set_sorted_order(self, sorted_idx):
        self.objects = [self.objects[i] for i in sorted_idx]

    def getattr_from_objects(self, attr):
        return np.array([getattr(o, attr, None) for o in self.objects])

    def __getattr__(self, attr):
        if attr.startswith('__') or attr == 'objects':
            raise AttributeError(attr)
        return self.getattr_from_objects(attr)

    def __iter__(self):
        return self.objects.__iter__()

    def __len__(self):
        return len(self.objects)

    def __getitem__(self, idx):
        return self.objects[idx]

    def __str__(self):
        out = ''
        for p in self:
            out += p.__str__()
            out += '\n'
        return out

    __repr__ = __str__


# ----------------------------------------------------------------------
def parameter_scan(p, **kwargs):
    """Return ParameterCollections with copies of ParameterCollection for different parameters

    Uses a given ParameterCollection as a template to create copies of it with one or more
    parameters changing. Stores all of these copies in a ParameterCollections for easy access.

    Parameters
    ----------
    p : ParameterCollection,
        The ParameterCollection that shall be used as a template for all the others
    **kwargs : Sequence,
               The keyword gives the parameter name and the Sequence the values that shall
               be scanned through.

    Returns
    -------
    ParameterCollections

    Examples
    --------
    >>> p = ParameterCollection(loss='mean', tau=0.5)
    >>> ps = parameter_scan(p, loss=['mean', 'temporal'])
    >>> print(ps[1])
    loss = temporal
    tau = 0.5
    """
    parameter_values = []

    for key, value in kwargs.items():
        parameter_values.append(list(zip([key]*len(value), value)))

    ps = []

    for parameter_value in itertools.product(*parameter_values):
        ps.append(p.alter(**dict(parameter_value)))

    return ParameterCollections(ps)
