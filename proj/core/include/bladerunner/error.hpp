#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bladerunner {

// Base of every failure the library reports. name() is the stable token that
// lands in CSV "error" and verdict "reasons" columns.
class Error : public std::runtime_error {
public:
    Error(std::string_view name, const std::string& message)
        : std::runtime_error(message), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define BLADERUNNER_DEFINE_ERROR(Type)                                        \
    class Type : public Error {                                               \
    public:                                                                   \
        explicit Type(const std::string& message) : Error(#Type, message) {}  \
    }

BLADERUNNER_DEFINE_ERROR(ImageDecodeError);
BLADERUNNER_DEFINE_ERROR(DegenerateResolution);
BLADERUNNER_DEFINE_ERROR(NetworkError);
BLADERUNNER_DEFINE_ERROR(StorageError);
BLADERUNNER_DEFINE_ERROR(BackendUnavailable);
BLADERUNNER_DEFINE_ERROR(LandmarkFailure);
BLADERUNNER_DEFINE_ERROR(NoFaceDetected);
BLADERUNNER_DEFINE_ERROR(EmptyCorpus);
BLADERUNNER_DEFINE_ERROR(MalformedCsv);
BLADERUNNER_DEFINE_ERROR(MalformedGoalposts);
BLADERUNNER_DEFINE_ERROR(NoCompatibleGoalpost);

#undef BLADERUNNER_DEFINE_ERROR

}  // namespace bladerunner
