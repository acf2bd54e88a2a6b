#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace phyloclust {

enum class ErrorKind {
  EmptyInput,
  DuplicateId,
  RaggedAlignment,
  IllegalCharacter,
  UnbalancedParentheses,
  DuplicateTipLabel,
  NegativeBranchLength,
  TrailingGarbage,
  MissingColumn,
  BadDate,
  UnknownStage,
  LengthMismatch,
  OutgroupNotMonophyletic,
  OutgroupMissing,
  TipSetMismatch,
  DegenerateTree,
  MissingSequence,
  UnannotatedSupport,
  UndefinedDistance,
  UnassignedId,
  SizeMismatch,
  EmptyList,
  IdSetMismatch,
  EmptyPartition,
  MissingMetadata,
  BadFormat,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::RaggedAlignment: return "RaggedAlignment";
    case ErrorKind::IllegalCharacter: return "IllegalCharacter";
    case ErrorKind::UnbalancedParentheses: return "UnbalancedParentheses";
    case ErrorKind::DuplicateTipLabel: return "DuplicateTipLabel";
    case ErrorKind::NegativeBranchLength: return "NegativeBranchLength";
    case ErrorKind::TrailingGarbage: return "TrailingGarbage";
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::BadDate: return "BadDate";
    case ErrorKind::UnknownStage: return "UnknownStage";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::OutgroupNotMonophyletic: return "OutgroupNotMonophyletic";
    case ErrorKind::OutgroupMissing: return "OutgroupMissing";
    case ErrorKind::TipSetMismatch: return "TipSetMismatch";
    case ErrorKind::DegenerateTree: return "DegenerateTree";
    case ErrorKind::MissingSequence: return "MissingSequence";
    case ErrorKind::UnannotatedSupport: return "UnannotatedSupport";
    case ErrorKind::UndefinedDistance: return "UndefinedDistance";
    case ErrorKind::UnassignedId: return "UnassignedId";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::EmptyList: return "EmptyList";
    case ErrorKind::IdSetMismatch: return "IdSetMismatch";
    case ErrorKind::EmptyPartition: return "EmptyPartition";
    case ErrorKind::MissingMetadata: return "MissingMetadata";
    case ErrorKind::BadFormat: return "BadFormat";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Data error raised by every parser and algorithm in the library.
/// The kind is stable and meant for programmatic matching; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace phyloclust
