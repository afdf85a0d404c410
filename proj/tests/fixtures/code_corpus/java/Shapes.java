public class Shapes {
    interface Shape {
        double area();
    }

    record Circle(double radius) implements Shape {
        public double area() {
            return Math.PI * radius * radius;
        }
    }

    record Square(double side) implements Shape {
        public double area() {
            return side * side;
        }
    }

    public static void main(String[] args) {
        Shape[] shapes = {new Circle(1.0), new Square(2.0)};
        double total = 0;
        for (Shape s : shapes) {
            total += s.area();
        }
        System.out.printf("%.4f%n", total);
    }
}
