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

r"""
spikeclr: contrastive self-supervised pretraining of spiking neural networks
on event-camera data, with a small reverse-mode autodiff engine, event
readers and augmentations, and the few-shot evaluation protocols.
"""

from .version import version

__all__ = ['version']
