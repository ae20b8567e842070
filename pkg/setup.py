#!/usr/bin/env python3

import sys

# quick version check
if sys.version_info < (3, 6):
    print("Sorry, holonome requires at least Python 3.6 to run.")
    sys.exit(1)

import os
import os.path

from setuptools import setup
from setuptools.command.sdist import sdist
from distutils import log
from distutils.command.clean import clean

import holonome_core.util as util

# make sure our current working directory is the same directory
# setup.py is in
curdir = os.path.split(sys.argv[0])[0]
if curdir:
    os.chdir(curdir)

setup_kwargs = {}
setup_kwargs['cmdclass'] = {}


#
# metadata
#

def read(fname):
    with open(fname, encoding="utf-8") as f:
        return f.read()


setup_kwargs['name'] = 'holonome'
setup_kwargs['version'] = util.findGitVersion()
setup_kwargs['description'] = ('Numerical toolkit for non-holonomic constrained Hamiltonian '
                               'systems: extension flows, critical manifolds and their '
                               'stability.')
setup_kwargs['license'] = 'GNU General Public License v3'
setup_kwargs['long_description'] = read('README.rst')
setup_kwargs['python_requires'] = '>=3.6'

# top-level files that should be included as documentation
doc_files = ['README.rst', 'CONTRIBUTORS.rst', 'DESIGN.md']


#
# script, package, and data
#

setup_kwargs['packages'] = ['holonome_core']
setup_kwargs['scripts'] = ['holonome.py']
setup_kwargs['install_requires'] = ['numpy', 'scipy', 'networkx']
setup_kwargs['data_files'] = [('share/doc/holonome', doc_files),
                              ('share/holonome/models', [os.path.join('models', f) for f in
                                                         sorted(os.listdir('models'))])]
setup_kwargs['test_suite'] = 'test'


class CustomClean(clean):
    def run(self):
        # do the normal cleanup
        clean.run(self)

        versionpath = os.path.join("holonome_core", "holonome_version.py")
        if os.path.exists(versionpath):
            log.info("removing '%s'", versionpath)
            if not self.dry_run:
                os.remove(versionpath)

        # now try to purge all *.pyc files
        for root, dirs, files in os.walk(os.path.join(os.path.dirname(__file__), ".")):
            for f in files:
                if f.endswith(".pyc"):
                    if self.dry_run:
                        log.warning("Would remove %s", os.path.join(root, f))
                    else:
                        os.remove(os.path.join(root, f))


def generate_version_py():
    try:
        outstr = ""
        outstr += "VERSION=%r\n" % util.findGitVersion()
        outstr += "HASH=%r\n" % util.findGitHash()
        with open("holonome_core/holonome_version.py", "w") as f:
            f.write(outstr)
    except Exception:
        print("WARNING: failed to build holonome_version file")


class CustomSDist(sdist):
    def run(self):
        # a source tarball has no git history to ask
        generate_version_py()
        sdist.run(self)


setup_kwargs['cmdclass']['clean'] = CustomClean
setup_kwargs['cmdclass']['sdist'] = CustomSDist
###

setup(**setup_kwargs)
