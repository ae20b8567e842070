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

"""Memoization for per-point computations.

A MechSystem asks for the configuration-space jet at a point (metric, coframe,
projectors and their derivatives) several times in a row: once for the
assembly, again for each monitor. The cache keys those jets on the exact
coordinate bytes so that the repeated requests cost one build.

"""

from collections import OrderedDict


class LRUCache(object):
    """A small least-recently-used cache with the standard container
    interface and "hits" / "misses" counters.

    """
    def __init__(self, size=64, destructor=None):
        """destructor, if given, is called with each evicted value"""
        self.size = size
        self.destructor = destructor
        self.cache = OrderedDict()
        self.hits = 0
        self.misses = 0

    # Worker processes start with an empty cache of the same size
    def __getstate__(self):
        return self.size

    def __setstate__(self, size):
        self.__init__(size)

    def __len__(self):
        return len(self.cache)

    def __contains__(self, key):
        return key in self.cache

    def __getitem__(self, key):
        try:
            value = self.cache[key]
        except KeyError:
            self.misses += 1
            raise
        self.cache.move_to_end(key)
        self.hits += 1
        return value

    def __setitem__(self, key, value):
        cache = self.cache
        if key in cache:
            cache[key] = value
            cache.move_to_end(key)
            return
        if len(cache) >= self.size:
            _, evicted = cache.popitem(last=False)
            if self.destructor:
                self.destructor(evicted)
        cache[key] = value

    def __delitem__(self, key):
        value = self.cache.pop(key)
        if self.destructor:
            self.destructor(value)

    def get_or_build(self, key, builder):
        """Return the cached value for key, calling builder() on a miss"""
        try:
            return self[key]
        except KeyError:
            value = builder()
            self[key] = value
            return value

    def clear(self):
        while self.cache:
            _, value = self.cache.popitem(last=False)
            if self.destructor:
                self.destructor(value)
