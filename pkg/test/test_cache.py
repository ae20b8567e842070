import pickle
import unittest

from holonome_core import cache


class TestLRU(unittest.TestCase):

    def setUp(self):
        self.lru = cache.LRUCache(size=5)

    def test_single_insert(self):
        self.lru[1] = 2
        self.assertEqual(self.lru[1], 2)

    def test_multiple_insert(self):
        self.lru[1] = 2
        self.lru[3] = 4
        self.lru[5] = 6
        self.assertEqual(self.lru[1], 2)
        self.assertEqual(self.lru[3], 4)
        self.assertEqual(self.lru[5], 6)

    def test_full(self):
        for i in range(1, 7):
            self.lru[i] = 'asdf'
        self.assertRaises(KeyError, self.lru.__getitem__, 1)
        for i in range(2, 7):
            self.assertEqual(self.lru[i], 'asdf')
        self.assertEqual(len(self.lru), 5)

    def test_lru(self):
        for i in range(1, 6):
            self.lru[i] = 'asdf'

        self.assertEqual(self.lru[1], 'asdf')
        self.assertEqual(self.lru[2], 'asdf')
        self.assertEqual(self.lru[4], 'asdf')
        self.assertEqual(self.lru[5], 'asdf')

        # 3 should be evicted now
        self.lru[6] = 'asdf'

        self.assertRaises(KeyError, self.lru.__getitem__, 3)
        self.assertEqual(self.lru[1], 'asdf')
        self.assertEqual(self.lru[2], 'asdf')
        self.assertEqual(self.lru[4], 'asdf')
        self.assertEqual(self.lru[5], 'asdf')
        self.assertEqual(self.lru[6], 'asdf')

    def test_counters(self):
        self.lru[1] = 'a'
        self.lru[1]
        self.assertRaises(KeyError, self.lru.__getitem__, 2)
        self.assertEqual(self.lru.hits, 1)
        self.assertEqual(self.lru.misses, 1)

    def test_get_or_build(self):
        calls = []

        def build():
            calls.append(1)
            return 'built'

        self.assertEqual(self.lru.get_or_build('k', build), 'built')
        self.assertEqual(self.lru.get_or_build('k', build), 'built')
        self.assertEqual(len(calls), 1)

    def test_destructor(self):
        evicted = []
        lru = cache.LRUCache(size=2, destructor=evicted.append)
        lru['a'] = 1
        lru['b'] = 2
        lru['c'] = 3
        self.assertEqual(evicted, [1])
        del lru['b']
        self.assertEqual(evicted, [1, 2])
        lru.clear()
        self.assertEqual(evicted, [1, 2, 3])
        self.assertEqual(len(lru), 0)

    def test_pickle_keeps_only_size(self):
        self.lru[1] = 'x'
        copy = pickle.loads(pickle.dumps(self.lru))
        self.assertEqual(copy.size, 5)
        self.assertEqual(len(copy), 0)
        self.assertNotIn(1, copy)


if __name__ == "__main__":
    unittest.main()
