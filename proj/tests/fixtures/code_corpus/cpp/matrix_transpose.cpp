#include <iostream>
#include <vector>

using Matrix = std::vector<std::vector<int>>;

Matrix transpose(const Matrix& m) {
    if (m.empty()) return {};
    Matrix t(m[0].size(), std::vector<int>(m.size()));
    for (size_t i = 0; i < m.size(); i++)
        for (size_t j = 0; j < m[i].size(); j++)
            t[j][i] = m[i][j];
    return t;
}

int main() {
    Matrix m = {{1, 2, 3}, {4, 5, 6}};
    for (const auto& row : transpose(m)) {
        for (int v : row)
            std::cout << v << " ";
        std::cout << "\n";
    }
}
