from data.datasets import DatasetSplit, ParallelPair, load_dataset, load_tsv, random_split
from data.tokenize import DOMAINS, MODES, PUNCTUATION, domain_modes, tokenize
from data.treebank import wsj_paren_transform
from data.vocab import STOP, UNK, Vocabulary, build_vocab, vocab_hash
