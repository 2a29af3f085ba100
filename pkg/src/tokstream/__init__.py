"""UTF-8 safe streaming for byte-level tokenizer output."""

from .constraints import (
    ByteDfa,
    Grammar,
    ScriptedProposer,
    UnsatisfiableError,
    advance,
    compile_grammar,
    run_constrained,
    token_mask,
)
from .streaming import (
    EmitEvent,
    MockLm,
    Mode,
    StreamState,
    advance_token,
    advance_token_robust,
    flush,
    generate,
)
from .tokens import (
    OovKind,
    OovStrategy,
    Token,
    TokenizeError,
    UnknownTokenError,
    Vocabulary,
    detokenize,
    non_homomorphism_witness,
    tokenize_greedy,
)
from .utf8 import (
    REPLACEMENT_CHAR,
    CodeUnitSeq,
    IllFormedError,
    Strategy,
    Utf8Validator,
    decode,
    encode_code_point,
    is_well_formed,
)
from .vocab import (
    ByteCodepointMap,
    TokenClass,
    VocabFormat,
    VocabReport,
    VocabStyle,
    build_byte_codepoint_map,
    classify_token,
    classify_vocabulary,
    decode_surface_form,
    encode_surface_form,
    find_ill_formed_witness,
    load_vocabulary,
)

__version__ = "0.1.0"
