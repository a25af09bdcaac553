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
################################################################################

""" pip install path next to the CMake build. """

import os
from setuptools import setup

here = os.path.abspath(os.path.dirname(__file__))
version = {}
with open(os.path.join(here, 'python', 'spikeclr', 'version.py')) as fd:
    exec(fd.read(), version)

setup(
    name='spikeclr',
    version=version['version'],
    description='Contrastive pretraining of spiking neural networks on event-camera data',
    license='GPL-3.0-or-later',
    package_dir={'': 'python'},
    packages=['spikeclr'],
    python_requires='>=3.9',
    install_requires=['numpy', 'scipy'],
    entry_points={'console_scripts': ['spikeclr = spikeclr.cli:main']},
)
