#pragma once

#include "bladerunner/image.hpp"
#include "bladerunner/landmarks.hpp"
#include "bladerunner/point.hpp"

#include <filesystem>
#include <istream>
#include <memory>
#include <string>
#include <vector>

namespace bladerunner {

// Cascade-of-regression-trees shape predictor read from dlib's serialized
// shape_predictor format (e.g. shape_predictor_68_face_landmarks.dat).
class ShapePredictor {
public:
    struct Split {
        unsigned long idx1 = 0;
        unsigned long idx2 = 0;
        float threshold = 0.0f;
    };

    struct RegressionTree {
        std::vector<Split> splits;                   // complete binary tree, heap order
        std::vector<std::vector<float>> leaf_values;  // one shape delta per leaf
    };

    // Throws BackendUnavailable if the file is missing or not a shape predictor.
    static ShapePredictor load(const std::filesystem::path& path);
    static ShapePredictor deserialize(std::istream& in);

    std::size_t num_parts() const { return initial_shape_.size() / 2; }
    std::size_t num_cascades() const { return forests_.size(); }

    // Runs the cascade inside `face` and returns points in image coordinates,
    // rounded to whole pixels.
    std::vector<Point2> predict(const ImageSample& sample, const FaceRect& face) const;

private:
    std::vector<float> initial_shape_;
    std::vector<std::vector<RegressionTree>> forests_;
    std::vector<std::vector<unsigned long>> anchor_idx_;
    std::vector<std::vector<Point2>> deltas_;
};

// Haar-cascade face detector followed by the dlib-format 68-point predictor.
class DlibLandmarkBackend final : public LandmarkBackend {
public:
    // Both files are loaded eagerly; failures raise BackendUnavailable.
    DlibLandmarkBackend(const std::filesystem::path& predictor_path,
                        const std::filesystem::path& detector_path);
    ~DlibLandmarkBackend() override;

    std::string_view name() const override { return "dlib"; }
    std::vector<FaceRect> find_faces(const ImageSample& sample) override;
    std::vector<Point2> predict(const ImageSample& sample, const FaceRect& face) override;
    std::unique_ptr<LandmarkBackend> clone() const override;

private:
    struct Detector;

    DlibLandmarkBackend(std::shared_ptr<const ShapePredictor> predictor,
                        std::filesystem::path detector_path);

    std::shared_ptr<const ShapePredictor> predictor_;
    std::filesystem::path detector_path_;
    std::unique_ptr<Detector> detector_;
};

}  // namespace bladerunner
