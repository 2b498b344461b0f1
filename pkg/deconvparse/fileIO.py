#!/usr/bin/env python
"""
This file includes all file input/output of deconvparse: binary PPM (P6) images and PGM (P5) label maps, the DPTN
tensor format used for exact float storage, dataset directories, model files, CSV reports, and dill-based saving and
loading of arbitrary package objects.
"""

from __future__ import division, print_function
import os
import io
import csv
import json
import struct
import dill
import numpy as np
from .datasets import SceneSample, SceneDataset, DatasetManifest
from .exceptions import FormatError

TENSOR_MAGIC = b'DPTN'
MODEL_FORMAT = 'deconvparse-model'
MODEL_VERSION = 1


# --- PPM / PGM -----------------------------------------------------------------------------------------------------

def _isSpace(byte):
    return byte in b' \t\n\r\x0b\x0c'


def _parseNetpbm(data, magic, channels):
    if data[:2] != magic:
        raise FormatError('Expected magic number {} at byte offset 0, found {!r}.'.format(magic.decode(), data[:2]))
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and (_isSpace(data[pos:pos+1]) or data[pos:pos+1] == b'#'):
            if data[pos:pos+1] == b'#':
                while pos < len(data) and data[pos:pos+1] not in (b'\n', b'\r'):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < len(data) and not _isSpace(data[pos:pos+1]) and data[pos:pos+1] != b'#':
            pos += 1
        token = data[start:pos]
        if not token:
            raise FormatError('Unexpected end of header at byte offset {}.'.format(pos))
        if not token.isdigit():
            raise FormatError('Invalid header value {!r} at byte offset {}.'.format(token, start))
        tokens.append(int(token))

    if pos >= len(data) or not _isSpace(data[pos:pos+1]):
        raise FormatError('Expected a single whitespace after the header at byte offset {}.'.format(pos))
    pos += 1

    width, height, maxval = tokens
    if width < 1 or height < 1:
        raise FormatError('Invalid image size {}x{} in header ending at byte offset {}.'.format(width, height, pos))
    if maxval != 255:
        raise FormatError('Only maxval 255 is supported, found {} in header ending at byte offset {}.'.format(maxval,
                                                                                                            pos))
    size = width*height*channels
    if len(data) - pos < size:
        raise FormatError('Truncated payload at byte offset {}: expected {} bytes, found {}.'.format(pos, size,
                                                                                                    len(data) - pos))
    pixels = np.frombuffer(data, dtype=np.uint8, count=size, offset=pos)
    return pixels.reshape(height, width, channels)


def _writeNetpbm(filename, magic, pixels):
    height, width = pixels.shape[:2]
    with open(filename, 'wb') as f:
        f.write(magic + '\n{} {}\n255\n'.format(width, height).encode('ascii'))
        f.write(np.ascontiguousarray(pixels, dtype=np.uint8).tobytes())


def readPPM(filename):
    """
    Reads a binary PPM (P6, maxval 255) image.

    Args:
        filename(str): Path to the image

    Returns:
        ndarray: Image of shape [3, H, W] with values in [0, 1]
    """
    with open(filename, 'rb') as f:
        data = f.read()
    return _parseNetpbm(data, b'P6', 3).transpose(2, 0, 1)/255.


def writePPM(filename, image):
    """
    Writes an image with values in [0, 1] and shape [3, H, W] as binary PPM, quantized to 8 bits.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3:
        raise FormatError('PPM images need the shape [3, H, W], got {}.'.format(image.shape))
    pixels = np.round(np.clip(image, 0., 1.)*255.).astype(np.uint8)
    _writeNetpbm(filename, b'P6', pixels.transpose(1, 2, 0))


def readPGM(filename):
    """
    Reads a binary PGM (P5, maxval 255) file, e.g. a label map with gray value = class index.

    Returns:
        ndarray: Integer array of shape [H, W]
    """
    with open(filename, 'rb') as f:
        data = f.read()
    return _parseNetpbm(data, b'P5', 1)[..., 0].astype(np.int64)


def writePGM(filename, values):
    """
    Writes an integer array [H, W] with values in [0, 255] as binary PGM.
    """
    values = np.asarray(values)
    if values.ndim != 2:
        raise FormatError('PGM files need a 2D array, got shape {}.'.format(values.shape))
    if values.size and (values.min() < 0 or values.max() > 255):
        raise FormatError('PGM values must lie in [0, 255].')
    _writeNetpbm(filename, b'P5', values.astype(np.uint8))


# --- DPTN tensors --------------------------------------------------------------------------------------------------

def writeTensor(stream, array):
    """
    Appends one tensor record to a binary stream: magic 'DPTN', u32 rank, rank x u32 extents and the little-endian
    float64 payload in row-major order.
    """
    array = np.asarray(array, dtype='<f8')
    stream.write(TENSOR_MAGIC)
    stream.write(struct.pack('<I', array.ndim))
    stream.write(struct.pack('<{}I'.format(array.ndim), *array.shape))
    stream.write(np.ascontiguousarray(array).tobytes())


def _readExactly(stream, size, what):
    offset = stream.tell()
    data = stream.read(size)
    if len(data) != size:
        raise FormatError('Truncated tensor {} at byte offset {}: expected {} bytes, found {}.'.format(
            what, offset, size, len(data)))
    return data


def readTensor(stream):
    """
    Reads one tensor record written by writeTensor from a binary stream.

    Returns:
        ndarray: float64 array
    """
    offset = stream.tell()
    magic = stream.read(4)
    if magic != TENSOR_MAGIC:
        raise FormatError('Expected tensor magic "DPTN" at byte offset {}, found {!r}.'.format(offset, magic))
    rank = struct.unpack('<I', _readExactly(stream, 4, 'rank'))[0]
    shape = struct.unpack('<{}I'.format(rank), _readExactly(stream, 4*rank, 'extents'))
    count = int(np.prod(shape)) if rank else 1
    payload = _readExactly(stream, 8*count, 'payload')
    return np.frombuffer(payload, dtype='<f8').reshape(shape).astype(np.float64)


def saveTensors(filename, arrays):
    """
    Writes a sequence of tensors to a DPTN file.
    """
    with open(filename, 'wb') as f:
        for array in arrays:
            writeTensor(f, array)


def loadTensors(filename):
    """
    Reads all tensor records of a DPTN file.

    Returns:
        list: float64 arrays
    """
    with open(filename, 'rb') as f:
        data = f.read()
    stream = io.BytesIO(data)
    arrays = []
    while stream.tell() < len(data):
        arrays.append(readTensor(stream))
    return arrays


# --- datasets ------------------------------------------------------------------------------------------------------

def writeDataset(directory, dataset, silent=False):
    """
    Stores a dataset in a directory: scene_XXXX.pgm label maps, scene_XXXX.ppm 8-bit previews of three-channel images,
    images.dptn with the exact float images and manifest.txt.
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    for i, sample in enumerate(dataset):
        writePGM(os.path.join(directory, 'scene_{:04d}.pgm'.format(i)), sample.labels)
        if sample.image.shape[0] == 3:
            writePPM(os.path.join(directory, 'scene_{:04d}.ppm'.format(i)), sample.image)
    saveTensors(os.path.join(directory, 'images.dptn'), [dataset.images])
    with open(os.path.join(directory, 'manifest.txt'), 'w') as f:
        f.write(dataset.manifest().toText())
    if not silent:
        print('+ Wrote dataset "{}" ({} samples) to {}.'.format(dataset.name, len(dataset), directory))


def readDataset(directory, silent=False):
    """
    Loads a dataset stored by writeDataset. Exact float images are taken from images.dptn if present, otherwise from
    the 8-bit PPM files. The manifest is checked against the loaded samples.

    Returns:
        SceneDataset
    """
    with open(os.path.join(directory, 'manifest.txt'), 'r') as f:
        manifest = DatasetManifest.fromText(f.read())

    labels = [readPGM(os.path.join(directory, 'scene_{:04d}.pgm'.format(i))) for i in range(manifest.samples)]
    tensorFile = os.path.join(directory, 'images.dptn')
    if os.path.exists(tensorFile):
        images = loadTensors(tensorFile)[0]
        if len(images) != manifest.samples:
            raise FormatError('{} holds {} images, manifest lists {}.'.format(tensorFile, len(images),
                                                                            manifest.samples))
    else:
        images = [readPPM(os.path.join(directory, 'scene_{:04d}.ppm'.format(i))) for i in range(manifest.samples)]

    dataset = SceneDataset([SceneSample(im, l) for im, l in zip(images, labels)], len(manifest.classNames),
                           manifest.classNames, manifest.name, manifest.seed)
    manifest.check(dataset)
    if not silent:
        print('+ Loaded dataset "{}" ({} samples) from {}.'.format(dataset.name, len(dataset), directory))
    return dataset


# --- models --------------------------------------------------------------------------------------------------------

def _networkTensors(network):
    tensors = []
    if network.inputMean is not None:
        tensors += [('input_mean', network.inputMean), ('input_std', network.inputStd)]
    for t, trunk in enumerate(network.trunks):
        for i, stage in enumerate(trunk.convStages, 1):
            tensors += [('trunk{}.conv{}.filters'.format(t, i), stage.filters),
                        ('trunk{}.conv{}.biases'.format(t, i), stage.biases)]
        for l, bank in enumerate(trunk.deconvBanks, 1):
            tensors.append(('trunk{}.deconv{}.filters'.format(t, l), bank.filters))
        tensors += [('trunk{}.feature_mean'.format(t), trunk.featureMean),
                    ('trunk{}.feature_std'.format(t), trunk.featureStd)]
    for k, head in enumerate(network.heads):
        tensors += [('head{}.weights'.format(k), head.weights), ('head{}.biases'.format(k), head.biases)]
    return tensors


def saveNetwork(filename, network, silent=False):
    """
    Writes a trained network to a model file: a text header of key=value lines terminated by a line 'end', followed by
    one DPTN record per tensor listed in the header.

    Args:
        filename(str): Path of the model file
        network(Network): Trained network
        silent(bool): If set to True, no output is generated.
    """
    if not network.trained:
        raise FormatError('Only trained networks can be saved to a model file.')
    tensors = _networkTensors(network)
    config = network.config
    header = ['format={}'.format(MODEL_FORMAT),
              'version={}'.format(MODEL_VERSION),
              'config={}'.format(json.dumps(config.toDict(), sort_keys=True)),
              'standardize={}'.format(config.standardizeMode),
              'lcn_window={}'.format(config.lcnWindow),
              'validation_pixel_acc={}'.format('' if network.validationPixelAcc is None
                                               else repr(network.validationPixelAcc)),
              'tensors={}'.format(','.join(name for name, _ in tensors)),
              'end']
    with open(filename, 'wb') as f:
        f.write(('\n'.join(header) + '\n').encode('utf-8'))
        for _, array in tensors:
            writeTensor(f, array)
    if not silent:
        print('+ Saved network "{}" to {}.'.format(config.name, filename))


def loadNetwork(filename, silent=False):
    """
    Reads a model file written by saveNetwork.

    Returns:
        Network: Trained network
    """
    from .network import Network, NetworkConfig
    from .deconvLayer import FilterBank

    with open(filename, 'rb') as f:
        data = f.read()
    stream = io.BytesIO(data)
    header = {}
    while True:
        offset = stream.tell()
        line = stream.readline()
        if not line:
            raise FormatError('Model header is not terminated by "end" (byte offset {}).'.format(offset))
        line = line.decode('utf-8').strip()
        if line == 'end':
            break
        if '=' not in line:
            raise FormatError('Malformed model header line at byte offset {}: "{}".'.format(offset, line))
        key, value = line.split('=', 1)
        header[key] = value

    if header.get('format') != MODEL_FORMAT or header.get('version') != str(MODEL_VERSION):
        raise FormatError('{} is not a deconvparse model file of version {}.'.format(filename, MODEL_VERSION))
    try:
        config = NetworkConfig.fromDict(json.loads(header['config']))
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError('Invalid network configuration in model header: {}.'.format(e))
    if header.get('standardize') != config.standardizeMode or header.get('lcn_window') != str(config.lcnWindow):
        raise FormatError('Preprocessing settings of the model header contradict its configuration.')

    names = header.get('tensors', '').split(',') if header.get('tensors') else []
    tensors = dict((name, readTensor(stream)) for name in names)

    network = Network(config, silent=True)
    try:
        if 'input_mean' in tensors:
            network.inputMean, network.inputStd = tensors['input_mean'], tensors['input_std']
        for t, trunk in enumerate(network.trunks):
            for i, stage in enumerate(trunk.convStages, 1):
                stage.filters = tensors['trunk{}.conv{}.filters'.format(t, i)]
                stage.biases = tensors['trunk{}.conv{}.biases'.format(t, i)]
            trunk.deconvBanks = [FilterBank(tensors['trunk{}.deconv{}.filters'.format(t, l)], l)
                                 for l in range(1, len(config.deconvLayers) + 1)]
            trunk.featureMean = tensors['trunk{}.feature_mean'.format(t)]
            trunk.featureStd = tensors['trunk{}.feature_std'.format(t)]
        for k, head in enumerate(network.heads):
            head.weights = tensors['head{}.weights'.format(k)]
            head.biases = tensors['head{}.biases'.format(k)]
    except KeyError as e:
        raise FormatError('Model file lacks tensor {}.'.format(e))

    value = header.get('validation_pixel_acc', '')
    network.validationPixelAcc = float(value) if value else None
    network.trained = True
    if not silent:
        print('+ Loaded network "{}" from {}.'.format(config.name, filename))
    return network


# --- CSV reports ---------------------------------------------------------------------------------------------------

def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def writeCSV(filename, header, rows):
    """
    Writes a CSV file with a header line. Floats are written with repr, so that identical values give identical files.
    """
    with open(filename, 'w') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def readCSV(filename):
    """
    Returns:
        tuple: header (list of str) and rows (list of lists of str)
    """
    with open(filename, 'r') as f:
        rows = list(csv.reader(f))
    if not rows:
        raise FormatError('{} is empty.'.format(filename))
    return rows[0], rows[1:]


def writeTrainingLog(filename, log):
    """
    Writes training records (stage, layer, epoch, mean_loss, mean_nnz_fraction) to a CSV file.
    """
    writeCSV(filename, ['stage', 'layer', 'epoch', 'mean_loss', 'mean_nnz_fraction'], log)


# --- dill -------------------------------------------------------------------------------------------------------------

def save(filename, obj):
    """
    Save any deconvparse object (network, study, dataset) to file using dill.

    Args:
        filename(str): Path + filename
        obj: Object to store
    """
    with open(filename, 'wb') as f:
        dill.dump(obj, f, protocol=dill.HIGHEST_PROTOCOL)
    print('+ Successfully saved {}.'.format(type(obj).__name__))


def load(filename):
    """
    Load an object that was saved using the deconvparse.save() function.

    Args:
        filename(str): Path + filename

    Returns:
        Stored object
    """
    with open(filename, 'rb') as f:
        obj = dill.load(f)
    print('+ Successfully loaded {}.'.format(type(obj).__name__))
    return obj
