package fx;

public class Circle extends Shape {
    private double r;

    Circle(double r) {
        this.r = r;
    }

    @Override
    double area() {
        return Math.PI * r * r;
    }

    @Override
    public String toString() {
        return "Circle(" + r + ")";
    }
}
