#include <deque>
#include <iostream>

class RollingMean {
public:
    explicit RollingMean(size_t window) : window_(window) {}

    double add(double x) {
        values_.push_back(x);
        sum_ += x;
        if (values_.size() > window_) {
            sum_ -= values_.front();
            values_.pop_front();
        }
        return sum_ / static_cast<double>(values_.size());
    }

private:
    size_t window_;
    std::deque<double> values_;
    double sum_ = 0.0;
};

int main() {
    RollingMean rm(3);
    for (double x : {1.0, 2.0, 3.0, 4.0, 5.0})
        std::cout << rm.add(x) << "\n";
}
