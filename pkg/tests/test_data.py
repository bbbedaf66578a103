import os
import struct

import numpy as np
import pytest

from data import (CaptionDataset, CaptionDataLoader, CaptionPairDataset, caption_csv_path, collate_captions,
                  create_caption_datasets, load_caption_csv, pad_embeddings, write_caption_csv)
from data.embeddings import (EmbeddingSequence, EmbeddingStore, load_audio_embedding_file, write_embedding_file)
from data.preprocess import (EncoderSpec, FeatureSequence, Vocabulary, build_vocabulary, encode_caption,
                             get_num_windows, tokenize_caption, window_embed, END_INDEX, PAD_INDEX, UNK_INDEX)
from data.synthetic import Grammar, make_synthetic_corpus, split_sizes, write_synthetic_corpus
from data.word_vectors import (WordEmbeddingTable, load_word_embedding_table, random_word_table, read_word_vectors,
                               write_word_vectors)
from numerics import Rng
from util.errors import FormatError, MissingEmbeddingError


####################################################################
# tokenization and vocabulary
####################################################################

def test_tokenize_examples():
    assert tokenize_caption('A dog barks.') == ['a', 'dog', 'barks']
    assert tokenize_caption('  Rain,  falling!  ') == ['rain', 'falling']


def test_tokenize_rejects_empty_caption():
    with pytest.raises(ValueError):
        tokenize_caption(' ... ')


def test_tokenize_is_idempotent():
    rng = np.random.default_rng(0)
    alphabet = list('abcXYZ .,!?') + ['  ']
    for _ in range(200):
        text = ''.join(rng.choice(alphabet, size=int(rng.integers(1, 30)))) + ' z'
        tokens = tokenize_caption(text)
        assert tokenize_caption(' '.join(tokens)) == tokens


def _train(*captions):
    return CaptionDataset(tuple(('clip_%d' % i, c) for i, c in enumerate(captions)), 'train')


def test_vocabulary_from_two_captions():
    vocab = build_vocabulary(_train('a dog', 'a cat'))
    assert vocab.tokens == ['<pad>', '<eos>', '<unk>', 'a', 'cat', 'dog']
    assert vocab.encode(['a', 'dog', 'bird']) == [3, 5, UNK_INDEX]


def test_vocabulary_min_count():
    assert build_vocabulary(_train('a dog', 'a cat'), min_count=2).tokens == ['<pad>', '<eos>', '<unk>', 'a']


def test_vocabulary_is_deterministic():
    captions = ['the bird sings', 'a bird calls', 'the rain falls']
    assert build_vocabulary(_train(*captions)) == build_vocabulary(_train(*captions))


def test_vocabulary_needs_train_split():
    with pytest.raises(ValueError):
        build_vocabulary(CaptionDataset((('c', 'a dog'),), 'validation'))
    with pytest.raises(ValueError):
        build_vocabulary(CaptionDataset((), 'train'))


def test_vocabulary_ignores_other_splits(data_dir):
    datasets = create_caption_datasets(data_dir)
    vocab = build_vocabulary(datasets['train'])
    held_out = {t for split in ('validation', 'evaluation') for _, c in datasets[split].examples
                for t in tokenize_caption(c)}
    train_tokens = {t for _, c in datasets['train'].examples for t in tokenize_caption(c)}
    assert set(vocab.tokens[3:]) == train_tokens
    assert not (held_out - train_tokens) & set(vocab.tokens)


def test_decode_stops_at_end_token():
    vocab = Vocabulary(['<pad>', '<eos>', '<unk>', 'a', 'dog'])
    assert vocab.decode([3, 4, END_INDEX, 3]) == ['a', 'dog']
    assert vocab.decode([PAD_INDEX, 4]) == ['dog']


def test_encode_caption_appends_end_and_truncates():
    vocab = build_vocabulary(_train('one two three four'))
    assert encode_caption('one two', vocab, 10)[-1] == END_INDEX
    assert len(encode_caption('one two three four', vocab, 3)) == 3


####################################################################
# word-embedding tables
####################################################################

def test_table_rows_come_from_the_file(tmp_path):
    vocab = build_vocabulary(_train('a dog barks'))
    vectors = np.random.default_rng(1).normal(size=(3, 300))
    path = str(tmp_path / 'glove.txt')
    write_word_vectors(path, ['a', 'dog', 'barks'], vectors, header=False)
    table = load_word_embedding_table(path, vocab, 'glove')
    for token, row in zip(['a', 'dog', 'barks'], vectors):
        np.testing.assert_array_equal(table.rows[vocab.index[token]], row)
    assert table.rows.shape == (len(vocab), 300)


def test_header_line_is_accepted(tmp_path):
    path = str(tmp_path / 'w2v.txt')
    write_word_vectors(path, ['a', 'dog'], np.ones((2, 300)), header=True)
    vectors = read_word_vectors(path)
    assert sorted(vectors) == ['a', 'dog']


def test_header_count_must_match_rows(tmp_path):
    path = tmp_path / 'w2v.txt'
    path.write_text('5 3\na 1.0 2.0 3.0\n', encoding='utf-8')
    with pytest.raises(FormatError) as info:
        read_word_vectors(str(path))
    assert info.value.line == 1


def test_missing_tokens_get_seeded_random_rows(tmp_path):
    vocab = build_vocabulary(_train('a dog barks'))
    path = str(tmp_path / 'fasttext.txt')
    write_word_vectors(path, ['a'], np.zeros((1, 300)))
    first = load_word_embedding_table(path, vocab, 'fasttext', seed=9)
    second = load_word_embedding_table(path, vocab, 'fasttext', seed=9)
    np.testing.assert_array_equal(first.rows, second.rows)
    assert np.all(first.rows[vocab.index['a']] == 0.0)
    assert np.any(first.rows[vocab.index['dog']] != 0.0)


def test_malformed_vector_line_reports_its_number(tmp_path):
    path = tmp_path / 'glove.txt'
    path.write_text('a 1.0 2.0\ndog 1.0 oops\n', encoding='utf-8')
    with pytest.raises(FormatError) as info:
        read_word_vectors(str(path))
    assert info.value.line == 2


def test_inconsistent_vector_width_is_rejected(tmp_path):
    path = tmp_path / 'glove.txt'
    path.write_text('a 1.0 2.0\ndog 1.0\n', encoding='utf-8')
    with pytest.raises(FormatError) as info:
        read_word_vectors(str(path))
    assert info.value.line == 2


def test_source_width_is_enforced(tmp_path):
    path = str(tmp_path / 'glove.txt')
    write_word_vectors(path, ['a'], np.ones((1, 4)))
    with pytest.raises(FormatError):
        load_word_embedding_table(path, build_vocabulary(_train('a dog')), 'glove')


def test_bert_table_cannot_be_trainable():
    with pytest.raises(ValueError):
        WordEmbeddingTable(np.zeros((4, 768)), 'bert_static', trainable=True)


def test_random_table_is_seeded():
    vocab = build_vocabulary(_train('a dog'))
    np.testing.assert_array_equal(random_word_table(vocab, 8, seed=3).rows, random_word_table(vocab, 8, seed=3).rows)
    assert not np.array_equal(random_word_table(vocab, 8, seed=3).rows, random_word_table(vocab, 8, seed=4).rows)


####################################################################
# audio embeddings
####################################################################

def test_embedding_file_round_trip(tmp_path):
    values = np.random.default_rng(2).normal(size=(4, 8)).astype(np.float32).astype(np.float64)
    seq = EmbeddingSequence(values, 'mock', 'half', 1.0, 0.5)
    path = str(tmp_path / 'clip.aemb')
    write_embedding_file(path, seq)
    loaded = load_audio_embedding_file(path)
    np.testing.assert_array_equal(loaded.values, values)
    assert (loaded.encoder_id, loaded.overlap) == ('mock', 'half')


def _raw_embedding(encoder_code, rows, cols, magic=b'AEMB', version=1):
    header = struct.pack('<4sHBBffII', magic, version, encoder_code, 0, 0.96, 0.96, rows, cols)
    return header + np.zeros(rows * cols, dtype='<f4').tobytes()


def test_embedding_width_must_match_encoder(tmp_path):
    path = tmp_path / 'clip.aemb'
    path.write_bytes(_raw_embedding(1, 3, 512))
    with pytest.raises(FormatError):
        load_audio_embedding_file(str(path))


def test_embedding_file_magic_and_length(tmp_path):
    path = tmp_path / 'clip.aemb'
    path.write_bytes(_raw_embedding(0, 2, 128, magic=b'NOPE'))
    with pytest.raises(FormatError):
        load_audio_embedding_file(str(path))
    path.write_bytes(_raw_embedding(0, 2, 128)[:-4])
    with pytest.raises(FormatError):
        load_audio_embedding_file(str(path))
    path.write_bytes(_raw_embedding(0, 2, 128, version=2))
    with pytest.raises(FormatError):
        load_audio_embedding_file(str(path))


def test_store_reports_every_missing_clip(data_dir):
    store = EmbeddingStore(data_dir, 'vggish', 'none')
    with pytest.raises(MissingEmbeddingError) as info:
        store.require(['clip_000', 'nope_2', 'nope_1'])
    assert info.value.clip_ids == ['nope_1', 'nope_2']
    assert store['clip_000'].feature_dim == 128


####################################################################
# windowing
####################################################################

def _frames(count, features=3, seed=0):
    return FeatureSequence(np.random.default_rng(seed).normal(size=(count, features)), 1.0)


def test_window_counts():
    spec = EncoderSpec('mock', 4, 10.0)
    assert window_embed(_frames(100), spec, 'none').num_frames == 10
    assert window_embed(_frames(100), spec, 'half').num_frames == 19
    assert window_embed(_frames(10), spec, 'none').num_frames == 1
    with pytest.raises(ValueError):
        window_embed(_frames(9), spec, 'none')


def test_window_counts_match_enumeration():
    for total in range(1, 65):
        x = _frames(total, features=2)
        for window in range(1, total + 1):
            spec = EncoderSpec('mock', 2, float(window))
            for overlap, hop in (('none', window), ('half', max(1, window // 2))):
                expected = len(range(0, total - window + 1, hop))
                assert window_embed(x, spec, overlap).num_frames == expected
                assert get_num_windows(total, window, hop) == expected


def test_window_embedding_uses_encoder_width():
    x = FeatureSequence(np.ones((30, 5)), 10.0)
    from data.preprocess import ENCODER_SPECS
    for name, spec in ENCODER_SPECS.items():
        seq = window_embed(x, spec, 'half')
        assert seq.feature_dim == spec.embedding_dim
        assert seq.encoder_id == name


####################################################################
# caption files and batching
####################################################################

def test_caption_csv_round_trip(tmp_path):
    dataset = CaptionDataset.from_clips({'a': ['one %d' % i for i in range(5)],
                                         'b': ['two, "quoted" %d' % i for i in range(5)]}, 'validation')
    path = str(tmp_path / 'captions.csv')
    write_caption_csv(path, dataset)
    assert load_caption_csv(path, 'validation') == dataset


def test_empty_caption_reports_its_row(tmp_path):
    path = tmp_path / 'captions.csv'
    path.write_text('file_name,caption_1,caption_2,caption_3,caption_4,caption_5\n'
                    'a,x,x,x,x,x\n'
                    'b,y,y,,y,y\n', encoding='utf-8')
    with pytest.raises(FormatError) as info:
        load_caption_csv(str(path), 'train')
    assert info.value.line == 3


def test_caption_csv_needs_five_caption_columns(tmp_path):
    path = tmp_path / 'captions.csv'
    path.write_text('file_name,caption_1\na,x\n', encoding='utf-8')
    with pytest.raises(FormatError):
        load_caption_csv(str(path), 'train')


def test_collate_shifts_targets_for_teacher_forcing():
    items = [{'clip_id': 'a', 'z': np.ones((3, 2)), 'targets': [4, 5, 1]},
             {'clip_id': 'b', 'z': np.ones((2, 2)), 'targets': [6, 1]}]
    batch = collate_captions(items)
    np.testing.assert_array_equal(batch['targets'], [[4, 5, 1], [6, 1, 0]])
    np.testing.assert_array_equal(batch['input_tokens'], [[4, 5], [6, 1]])
    np.testing.assert_array_equal(batch['loss_mask'], [[True, True, True], [True, True, False]])
    np.testing.assert_array_equal(batch['memory_mask'], [[True, True, True], [True, True, False]])
    assert batch['z'].shape == (2, 3, 2)


def test_pad_embeddings_zero_fills():
    values, mask = pad_embeddings([np.ones((1, 2)), np.full((3, 2), 2.0)])
    assert values[0, 1:].sum() == 0.0
    assert mask.sum() == 4


def test_loader_keeps_partial_batch_and_reshuffles(data_dir):
    datasets = create_caption_datasets(data_dir)
    vocab = build_vocabulary(datasets['train'])
    pairs = CaptionPairDataset(datasets['train'], vocab, EmbeddingStore(data_dir, 'vggish', 'none'), 30)
    loader = CaptionDataLoader(pairs, 16, Rng(1))
    first = [clip for batch in loader for clip in batch['clip_ids']]
    second = [clip for batch in loader for clip in batch['clip_ids']]
    assert len(loader) == 5
    assert sorted(first) == sorted(pairs.clip_ids)
    assert first != second
    assert [len(b['clip_ids']) for b in loader] == [16, 16, 16, 16, 1]


####################################################################
# synthetic corpora
####################################################################

def test_split_sizes():
    assert split_sizes(20) == {'train': 13, 'validation': 3, 'evaluation': 4}
    assert split_sizes(3) == {'train': 1, 'validation': 1, 'evaluation': 1}
    assert sum(split_sizes(47).values()) == 47
    with pytest.raises(ValueError):
        split_sizes(2)


def test_synthetic_corpus_layout(data_dir):
    datasets = create_caption_datasets(data_dir)
    assert [len(datasets[s].clip_ids) for s in ('train', 'validation', 'evaluation')] == [13, 3, 4]
    for dataset in datasets.values():
        for clip in dataset.clip_ids:
            assert len(dataset.captions(clip)) == 5
            assert os.path.isfile(os.path.join(data_dir, 'embeddings', 'coala_half', clip + '.aemb'))
    for source in ('w2v', 'glove', 'fasttext', 'cbow_clotho', 'bert_static'):
        assert os.path.isfile(os.path.join(data_dir, 'word_vectors', source + '.txt'))


def test_no_caption_leaks_across_splits(data_dir):
    datasets = create_caption_datasets(data_dir)
    clips = [set(d.clip_ids) for d in datasets.values()]
    assert not (clips[0] & clips[1]) and not (clips[0] & clips[2]) and not (clips[1] & clips[2])


def test_train_vocabulary_covers_every_split(data_dir):
    datasets = create_caption_datasets(data_dir)
    vocab = build_vocabulary(datasets['train'])
    for dataset in datasets.values():
        for _, caption in dataset.examples:
            assert UNK_INDEX not in vocab.encode(tokenize_caption(caption))


def test_synthetic_corpus_is_deterministic(tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    write_synthetic_corpus(str(first), clips=6, seed=3)
    write_synthetic_corpus(str(second), clips=6, seed=3)
    names = sorted(os.path.relpath(os.path.join(d, f), first) for d, _, files in os.walk(first) for f in files)
    assert names == sorted(os.path.relpath(os.path.join(d, f), second) for d, _, files in os.walk(second) for f in files)
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_plain_corpus_repeats_one_caption(plain_data_dir):
    datasets = create_caption_datasets(plain_data_dir)
    for dataset in datasets.values():
        for clip in dataset.clip_ids:
            assert len(set(dataset.captions(clip))) == 1


def test_every_clip_has_a_distinct_combination():
    corpus = make_synthetic_corpus(Rng(0), 20)
    assert len(set(corpus.combos.values())) == 20
    assert len(Grammar().combinations) == 48
    assert corpus.datasets['train'].split == 'train'


def test_bert_vectors_cover_every_token(data_dir):
    vectors = read_word_vectors(os.path.join(data_dir, 'word_vectors', 'bert_static.txt'))
    assert sorted(vectors) == Grammar().token_set()
    glove = read_word_vectors(os.path.join(data_dir, 'word_vectors', 'glove.txt'))
    assert len(glove) == len(vectors) - 2
    assert caption_csv_path(data_dir, 'train').endswith('captions_train.csv')
