#include <cmath>
#include <iostream>

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

int main() {
    Vec2 a{3.0, 4.0};
    Vec2 b{1.0, -2.0};
    std::cout << (a + b).norm() << "\n";
    std::cout << (a - b).norm() << "\n";
}
