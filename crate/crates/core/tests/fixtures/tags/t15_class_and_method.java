package tags;

public class Both {
    private int n;

    public int next() {
        return ++n;
    }
}
