package tags;

public class Suppressed {
    @SuppressWarnings({
        "unchecked",
        "rawtypes"
    })
    void raw(java.util.List xs) {
        xs.add(1);
    }
}
