#include "enfp/error.hpp"

namespace enfp {

const char* to_string(ErrorKind kind)
{
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::invalid_scale: return "invalid scale";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::data: return "data error";
    case ErrorKind::cannot_classify: return "cannot classify";
    case ErrorKind::out_of_range: return "out of range";
    case ErrorKind::wrong_mode: return "wrong mode";
    case ErrorKind::missing_stratum: return "missing stratum";
    case ErrorKind::corrupt_ledger: return "corrupt ledger";
    case ErrorKind::non_convergence: return "non-convergence";
  }
  return "error";
}

} // namespace enfp
