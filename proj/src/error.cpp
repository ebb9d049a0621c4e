#include "fairpca/error.hpp"

namespace fairpca {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NotFinite: return "NotFinite";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Io: return "Io";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateGap: return "DegenerateGap";
    case ErrorKind::GroupStarvation: return "GroupStarvation";
    case ErrorKind::RankCollapse: return "RankCollapse";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::DimensionBudget: return "DimensionBudget";
  }
  return "UnknownError";
}

}  // namespace fairpca
