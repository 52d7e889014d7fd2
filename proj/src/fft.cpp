#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace macrofp::detail {

namespace {

enum class Kind
{
    plane,
    rows,
    columns,
};

class PlanCache
{
public:
    ~PlanCache()
    {
        for (auto& [key, plan] : plans_)
            fftw_destroy_plan(plan);
    }

    fftw_plan get(Kind kind, std::size_t n, std::size_t count, Direction direction)
    {
        const auto key = std::make_tuple(kind, n, count, direction);
        std::lock_guard lock(mutex_);
        if (auto it = plans_.find(key); it != plans_.end())
            return it->second;

        const int sign = direction == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
        const int len = static_cast<int>(n);
        const int howmany = static_cast<int>(count);
        auto* scratch = fftw_alloc_complex(n * n);
        fftw_plan plan = nullptr;
        switch (kind) {
        case Kind::plane:
            plan = fftw_plan_dft_2d(len, len, scratch, scratch, sign, FFTW_ESTIMATE);
            break;
        case Kind::rows: {
            int dims[] = {len};
            plan = fftw_plan_many_dft(1, dims, howmany, scratch, nullptr, 1, len, scratch, nullptr, 1, len,
                                      sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
            break;
        }
        case Kind::columns: {
            int dims[] = {len};
            plan = fftw_plan_many_dft(1, dims, howmany, scratch, nullptr, len, 1, scratch, nullptr, len, 1,
                                      sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
            break;
        }
        }
        fftw_free(scratch);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<Kind, std::size_t, std::size_t, Direction>, fftw_plan> plans_;
};

PlanCache& cache()
{
    static PlanCache instance;
    return instance;
}

fftw_complex* as_fftw(complex_t* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

void dft2d(complex_t* data, std::size_t n, Direction direction)
{
    fftw_execute_dft(cache().get(Kind::plane, n, n, direction), as_fftw(data), as_fftw(data));
}

void dft_rows(complex_t* first, std::size_t n, std::size_t count, Direction direction)
{
    if (count > 0)
        fftw_execute_dft(cache().get(Kind::rows, n, count, direction), as_fftw(first), as_fftw(first));
}

void dft_columns(complex_t* first, std::size_t n, std::size_t count, Direction direction)
{
    if (count > 0)
        fftw_execute_dft(cache().get(Kind::columns, n, count, direction), as_fftw(first), as_fftw(first));
}

} // namespace macrofp::detail
