#include "cpmr/error.hpp"

namespace cpmr {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::InvariantError: return "InvariantError";
    case Errc::NotFound: return "NotFound";
    case Errc::DuplicateLabel: return "DuplicateLabel";
    case Errc::NotContiguous: return "NotContiguous";
    case Errc::NotASubprocess: return "NotASubprocess";
    case Errc::NoSuchBranch: return "NoSuchBranch";
    case Errc::NoSuchCondition: return "NoSuchCondition";
    case Errc::WouldViolateInvariant: return "WouldViolateInvariant";
    case Errc::LastBranch: return "LastBranch";
    case Errc::KindUnchanged: return "KindUnchanged";
    case Errc::ConditionCountMismatch: return "ConditionCountMismatch";
    case Errc::InvalidTarget: return "InvalidTarget";
    case Errc::InvalidMeaning: return "InvalidMeaning";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::UnparseableOutput: return "UnparseableOutput";
    case Errc::InvalidModelOutput: return "InvalidModelOutput";
    case Errc::IncompleteTrace: return "IncompleteTrace";
    case Errc::InvalidTrace: return "InvalidTrace";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MissingFile: return "MissingFile";
    case Errc::BadCsv: return "BadCsv";
    case Errc::InvalidModel: return "InvalidModel";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::NothingToUndo: return "NothingToUndo";
    case Errc::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

}  // namespace cpmr
