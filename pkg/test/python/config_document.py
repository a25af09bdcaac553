# ----------------------------------------------------------------------

import os
import tempfile

# ----------------------------------------------------------------------

from spikeclr.config import default_config, load_config, validate_config, config_hash
from spikeclr.config import apply_overrides, set_seed, train_config, split_spec
from spikeclr.config import TrainConfig, SplitSpec, SECTIONS
from spikeclr.train_eval import config_document
from spikeclr.ParameterCollection import ParameterCollection
from spikeclr.exceptions import ConfigurationError

# ----------------------------------------------------------------------

def expect_error(fn, *args, key=None):
    try:
        fn(*args)
    except ConfigurationError as e:
        print('--> rejected:', e)
        if key is not None:
            assert key in str(e), f'{key!r} not named in {e}'
    else:
        raise AssertionError(f'{args} should be rejected')


def test_defaults():
    print("== Default configuration ==")
    p = validate_config(default_config())
    assert tuple(sorted(p.keys())) == tuple(sorted(SECTIONS))
    assert p.model.backbone == 'mini_sew' and p.model.T == 8
    assert p.pretrain.tau == 0.5 and p.pretrain.epochs == 40
    assert p.eval.k == 5 and p.eval.splits == 3

    # the document format round trips every default
    doc = p.to_document()
    assert ParameterCollection.from_document(doc) == p
    assert load_config() == p


def test_file_and_overrides():
    print("== Config document and overrides ==")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, 'run.cfg')
        with open(path, 'w') as fd:
            fd.write('# small run\n'
                     'model.T = 4\n'
                     "model.backbone = 'tiny_conv'\n"
                     'pretrain.epochs = 2\n'
                     "augment.enabled = ('spatial',)\n")
        p = load_config(path, [('pretrain.epochs', '3'), ('eval.k', 'full')])
        assert p.model.T == 4 and p.model.backbone == 'tiny_conv'
        assert p.pretrain.epochs == 3
        assert p.eval.k == 'full'
        assert train_config(p).policy.enabled == {'spatial'}

        with open(path, 'w') as fd:
            fd.write('model.T 4\n')
        expect_error(load_config, path)

    expect_error(load_config, None, [('model.depth', '3')], key='model.depth')
    expect_error(load_config, None, [('optimizer.lr', '0.1')], key='optimizer.lr')
    expect_error(load_config, None, [('model', '3')])


def test_validation_names_key():
    print("== Validation errors name the key ==")
    cases = [('model.T', 0), ('model.backbone', 'resnet18'), ('pretrain.tau', 0.),
             ('downstream.batch_size', 0), ('eval.k', 0), ('eval.label_fraction', 1.5),
             ('pretrain.loss', 'max'), ('data.sensor', (4, 4)), ('pretrain.momentum', 1.),
             ('model.init_rate', 1.), ('model.init_rate', -0.1), ('model.init_samples', 0)]
    for key, value in cases:
        p = apply_overrides(default_config(), [(key, value)])
        expect_error(validate_config, p, key=key)

    for key, value in [('model.beta', 1.5), ('model.v_reset', 2.)]:
        expect_error(validate_config, apply_overrides(default_config(), [(key, value)]), key='model')
    p = apply_overrides(default_config(), [('augment.flip_prob', 2.)])
    expect_error(validate_config, p, key='augment')


def test_hash_and_seed():
    print("== Config hash and seeding ==")
    a, b = default_config(), default_config()
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 12
    assert config_hash(a, 'probe') != config_hash(a, 'finetune')

    set_seed(b, 7)
    assert config_hash(a) != config_hash(b)
    assert b.model.seed == b.pretrain.seed == b.eval.seed == b.data.seed == 7

    cfg = train_config(b, 'downstream')
    assert cfg.seed == 7 and cfg.epochs == 30
    expect_error(train_config, b, 'finetune')


def test_typed_views():
    print("== TrainConfig and SplitSpec ==")
    cfg = TrainConfig()
    assert cfg.alter(seed=3).seed == 3 and cfg.seed == 0
    for kwargs in [dict(epochs=-1), dict(batch_size=0), dict(tau=0.), dict(T=0),
                   dict(loss='sum'), dict(momentum=1.)]:
        expect_error(lambda: TrainConfig(**kwargs))

    assert config_document(cfg) == config_document(TrainConfig())
    assert config_document(cfg) != config_document(cfg.alter(tau=0.1))
    spec = SplitSpec(k_per_class=1, num_splits=5, seed=2)
    assert 'split.k_per_class = 1' in config_document(cfg, spec)

    assert spec.label == '1'
    assert SplitSpec(label_fraction=0.1).label == '0.1'
    assert split_spec(default_config()) == SplitSpec(5, 3, 0, None)
    for kwargs in [dict(k_per_class=0), dict(k_per_class='all'), dict(num_splits=0),
                   dict(label_fraction=0.)]:
        expect_error(lambda: SplitSpec(**kwargs))


if __name__ == '__main__':
    test_defaults()
    test_file_and_overrides()
    test_validation_names_key()
    test_hash_and_seed()
    test_typed_views()
