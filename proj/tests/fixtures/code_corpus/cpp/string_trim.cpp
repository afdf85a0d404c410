#include <iostream>
#include <string>

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int main() {
    std::cout << "[" << trim("  hello  ") << "]\n";
    std::cout << "[" << trim("\t\n") << "]\n";
    std::cout << "[" << trim("x") << "]\n";
}
