#ifndef RESOBI_RECORDING_HPP
#define RESOBI_RECORDING_HPP

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "resobi/error.hpp"
#include "resobi/matrix.hpp"

namespace resobi
{

//
// Multichannel time series: one row per channel. Immutable after
// construction; the constructor enforces channels >= 2, samples > 4*channels,
// a positive sample rate and finite data.
//
class Recording
{
public:
    Recording(Matrix data, double sample_rate, std::vector<std::string> channel_names = {})
        : data_(std::move(data)), sample_rate_(sample_rate), names_(std::move(channel_names))
    {
        if (data_.rows() < 2)
            throw Error(ErrorCode::InvalidArgument, "a recording needs at least 2 channels");
        if (data_.cols() <= 4 * data_.rows())
            throw Error(ErrorCode::InvalidArgument,
                        "recording has " + std::to_string(data_.cols()) +
                            " samples; need more than 4x the channel count");
        if (!(sample_rate_ > 0.0))
            throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
        if (!data_.all_finite())
            throw Error(ErrorCode::InvalidArgument, "recording contains non-finite samples");
        if (!names_.empty() && names_.size() != data_.rows())
            throw Error(ErrorCode::DimensionMismatch, "channel name count != channel count");
    }

    const Matrix& data() const noexcept { return data_; }
    double sample_rate() const noexcept { return sample_rate_; }
    const std::vector<std::string>& channel_names() const noexcept { return names_; }
    std::size_t channels() const noexcept { return data_.rows(); }
    std::size_t samples() const noexcept { return data_.cols(); }

    // Columns [begin, end) of every channel.
    Matrix slice(std::size_t begin, std::size_t end) const
    {
        if (begin >= end || end > samples())
            throw Error(ErrorCode::IndexOutOfRange, "slice [" + std::to_string(begin) + ", " +
                                                        std::to_string(end) + ") out of range");
        Matrix out(channels(), end - begin);
        for (std::size_t c = 0; c < channels(); ++c)
        {
            auto src = data_.row(c);
            auto dst = out.row(c);
            for (std::size_t t = begin; t < end; ++t)
                dst[t - begin] = src[t];
        }
        return out;
    }

private:
    Matrix data_;
    double sample_rate_;
    std::vector<std::string> names_;
};

} // namespace resobi

#endif
