#pragma once

#include <stdexcept>
#include <string>

namespace hatedet {

/// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorCategory { Usage, Data, Provider };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), category_(category), kind_(std::move(kind)) {}

    [[nodiscard]] ErrorCategory category() const noexcept { return category_; }
    /// Short machine-friendly name such as "LabelError".
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    ErrorCategory category_;
    std::string kind_;
};

#define HATEDET_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& message)                              \
            : Error(ErrorCategory::Category, #Name, message) {}                \
    };

// configuration / caller mistakes
HATEDET_DEFINE_ERROR(ConfigError, Usage)
HATEDET_DEFINE_ERROR(PreconditionError, Usage)
HATEDET_DEFINE_ERROR(UnknownFormat, Usage)
HATEDET_DEFINE_ERROR(SpecError, Usage)

// corpus and data-shape problems
HATEDET_DEFINE_ERROR(MissingFile, Data)
HATEDET_DEFINE_ERROR(SchemaError, Data)
HATEDET_DEFINE_ERROR(LabelError, Data)
HATEDET_DEFINE_ERROR(DuplicateId, Data)
HATEDET_DEFINE_ERROR(UnlabeledInstance, Data)
HATEDET_DEFINE_ERROR(SchemeMismatch, Data)
HATEDET_DEFINE_ERROR(CoverageError, Data)
HATEDET_DEFINE_ERROR(UnlabeledGold, Data)
HATEDET_DEFINE_ERROR(ImageUnreadable, Data)
HATEDET_DEFINE_ERROR(EmptyTrainSet, Data)
HATEDET_DEFINE_ERROR(EmptyText, Data)
HATEDET_DEFINE_ERROR(MissingReport, Data)
HATEDET_DEFINE_ERROR(ParseError, Data)
HATEDET_DEFINE_ERROR(UnknownLabel, Data)

// external services and model backends
HATEDET_DEFINE_ERROR(ProviderError, Provider)
HATEDET_DEFINE_ERROR(BackendError, Provider)
HATEDET_DEFINE_ERROR(BudgetExceeded, Provider)

#undef HATEDET_DEFINE_ERROR

}  // namespace hatedet
