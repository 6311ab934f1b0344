"""Three-server secure computation over Z_{2^ell} with abort security against one malicious server."""
from .config import ConfigError, SessionConfig
from .context import AbortError, FairAbort, Party, RunResult, run_session
from .core import pi_frec, pi_jsh, pi_rec, pi_sh
from .layer1 import pi_and, pi_bit2a, pi_bitext, pi_mult
from .layer2 import pi_compare, pi_dotp, pi_dotp_tr, pi_matmul_tr, pi_relu, pi_sig, pi_trunc
from .ring import Ring, decode_array, encode_array, get_ring
from .sharing import Role, RssShare

__version__ = "0.1.0"

__all__ = [
    "AbortError", "ConfigError", "FairAbort", "Party", "Ring", "Role", "RssShare", "RunResult",
    "SessionConfig", "decode_array", "encode_array", "get_ring", "pi_and", "pi_bit2a",
    "pi_bitext", "pi_compare", "pi_dotp", "pi_dotp_tr", "pi_frec", "pi_jsh", "pi_matmul_tr",
    "pi_mult", "pi_rec", "pi_relu", "pi_sh", "pi_sig", "pi_trunc", "run_session",
]
