"""Checkpoint I/O and the abstract model interface.

Checkpoint layout (little-endian):
    magic 'AACK' | u16 version | u32 header length | UTF-8 JSON header (sorted keys)
    | per tensor: u64 element count, then that many f8 values row-major
Tensors appear in the order the header's "tensors" list names them.
"""
import json
import struct
from abc import ABC, abstractmethod
from collections import OrderedDict

import numpy as np

from numerics import no_grad
from util.errors import FormatError


CHECKPOINT_MAGIC = b'AACK'
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct('<4sHI')
_COUNT = struct.Struct('<Q')


def write_checkpoint(path, header: dict, tensors: "OrderedDict[str, np.ndarray]"):
    header = dict(header)
    header['tensors'] = [[name, list(array.shape)] for name, array in tensors.items()]
    encoded = json.dumps(header, sort_keys=True, separators=(',', ':')).encode('utf-8')
    with open(path, 'wb') as f:
        f.write(_PREFIX.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(encoded)))
        f.write(encoded)
        for array in tensors.values():
            array = np.ascontiguousarray(array, dtype='<f8')
            f.write(_COUNT.pack(array.size))
            f.write(array.tobytes())


def read_checkpoint(path):
    """Return (header, OrderedDict name -> array)."""
    with open(path, 'rb') as f:
        payload = f.read()
    if len(payload) < _PREFIX.size:
        raise FormatError('truncated checkpoint', path)
    magic, version, length = _PREFIX.unpack_from(payload)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError('bad magic %r' % magic, path)
    if version != CHECKPOINT_VERSION:
        raise FormatError('unsupported checkpoint version %d' % version, path)
    offset = _PREFIX.size
    try:
        header = json.loads(payload[offset:offset + length].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError('unreadable header: %s' % e, path)
    offset += length
    tensors = OrderedDict()
    for name, shape in header['tensors']:
        if offset + _COUNT.size > len(payload):
            raise FormatError('truncated before tensor %s' % name, path)
        (count,) = _COUNT.unpack_from(payload, offset)
        offset += _COUNT.size
        if count != int(np.prod(shape)) or offset + 8 * count > len(payload):
            raise FormatError('tensor %s does not match its declared shape %s' % (name, shape), path)
        tensors[name] = np.frombuffer(payload, dtype='<f8', count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * count
    if offset != len(payload):
        raise FormatError('%d trailing bytes' % (len(payload) - offset), path)
    return header, tensors


class BaseModel(ABC):
    """This class is an abstract base class (ABC) for models.
    To create a subclass, you need to implement the following functions:
        -- <__init__>:                      initialize the class; first call BaseModel.__init__(self, cfg).
        -- <set_input>:                     unpack a collated batch.
        -- <forward>:                       produce intermediate results.
        -- <optimize_parameters>:           calculate losses, gradients, and update network weights.
        -- <extra_tensors>:                 (optionally) tensors saved after the networks' parameters.
    """

    def __init__(self, cfg, is_train=True):
        """Initialize the BaseModel class.

        Parameters:
            cfg (ExperimentConfig) -- stores all the experiment settings
            is_train (bool)        -- whether optimizers are created

        Subclasses define:
            -- self.loss_names (str list):          training losses reported by <get_current_losses>.
            -- self.model_names (str list):         networks, stored as attributes 'net' + name.
            -- self.optimizers (optimizer list):    optimizers stepped by <optimize_parameters>.
        """
        self.cfg = cfg
        self.isTrain = is_train
        self.loss_names = []
        self.model_names = []
        self.optimizers = []

    @abstractmethod
    def set_input(self, input):
        pass

    @abstractmethod
    def forward(self):
        pass

    @abstractmethod
    def optimize_parameters(self):
        pass

    def extra_tensors(self):
        return OrderedDict()

    def networks(self):
        return [getattr(self, 'net' + name) for name in self.model_names]

    def train(self):
        for net in self.networks():
            net.train()

    def eval(self):
        """Make models eval mode during test time"""
        for net in self.networks():
            net.eval()

    def test(self):
        """Forward function used in test time, without recording a tape."""
        with no_grad():
            self.forward()

    def get_current_losses(self):
        return OrderedDict((name, float(getattr(self, 'loss_' + name).item())) for name in self.loss_names)

    def named_tensors(self):
        """Every persisted tensor, in declaration order: network parameters, then <extra_tensors>."""
        named = OrderedDict()
        for name in self.model_names:
            for param_name, param in getattr(self, 'net' + name).named_parameters('net%s.' % name):
                named[param_name] = param
        named.update(self.extra_tensors())
        return named

    def state_dict(self):
        return OrderedDict((name, tensor.data.copy()) for name, tensor in self.named_tensors().items())

    def load_state_dict(self, state):
        named = self.named_tensors()
        if list(named) != list(state):
            raise FormatError('checkpoint tensors %s do not match the model (%s)' % (list(state), list(named)))
        for name, tensor in named.items():
            if tensor.shape != state[name].shape:
                raise FormatError('tensor %s has shape %s, model expects %s' % (name, state[name].shape, tensor.shape))
            tensor.data = np.array(state[name], dtype=np.float64, copy=True)
            tensor.zero_grad()

    def save_networks(self, path, header=None):
        write_checkpoint(path, header or {}, self.state_dict())

    def print_networks(self, verbose):
        """Print the total number of parameters in the network and (if verbose) the parameter shapes"""
        print('---------- Networks initialized -------------')
        for name in self.model_names:
            net = getattr(self, 'net' + name)
            num_params = sum(p.data.size for p in net.parameters())
            if verbose:
                for param_name, param in net.named_parameters():
                    print('  %-40s %s' % (param_name, param.shape))
            print('[Network %s] Total number of parameters : %.3f M' % (name, num_params / 1e6))
        print('-----------------------------------------------')
